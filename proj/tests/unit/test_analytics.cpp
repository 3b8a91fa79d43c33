#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "msr/analytics.hpp"
#include "msr/errors.hpp"
#include "support/synthetic.hpp"
#include "support/reference_genres.hpp"

using namespace msr;
using Catch::Approx;

namespace {

MsrRect rect_of(const std::string& genre) { return msr_rectangle(testing::reference_genre(genre)); }

MsrRect random_rect(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double x0 = u(rng), x1 = u(rng), y0 = u(rng), y1 = u(rng);
  return {std::min(x0, x1), std::max(x0, x1), std::min(y0, y1), std::max(y0, y1)};
}

// Sum-of-squares definition evaluated in long double, via SST - SSW.
double brute_force_f(const std::vector<std::vector<double>>& groups) {
  long double grand = 0.0L;
  std::size_t n = 0;
  for (const auto& g : groups) {
    for (double x : g) grand += x;
    n += g.size();
  }
  grand /= static_cast<long double>(n);
  long double sst = 0.0L, ssw = 0.0L;
  for (const auto& g : groups) {
    long double m = 0.0L;
    for (double x : g) m += x;
    m /= static_cast<long double>(g.size());
    for (double x : g) {
      sst += (x - grand) * (x - grand);
      ssw += (x - m) * (x - m);
    }
  }
  const long double k = static_cast<long double>(groups.size());
  return static_cast<double>(((sst - ssw) / (k - 1)) / (ssw / (static_cast<long double>(n) - k)));
}

}  // namespace

TEST_CASE("genre_stats two-point and single-record examples") {
  std::vector<SongRecord> two = {{"a", "Pop", std::nullopt, 0.70, 1.24}, {"b", "Pop", std::nullopt, 0.77, 1.25}};
  const auto s = genre_stats(two).at("Pop");
  CHECK(s.count == 2);
  CHECK(s.mean_min == Approx(0.735).margin(1e-12));
  CHECK(s.mean_max == Approx(1.245).margin(1e-12));
  CHECK(s.std_min == Approx(0.035).margin(1e-12));

  std::vector<SongRecord> one = {{"a", "Jazz&Blues", 120.0, 0.7, 1.3}};
  const auto j = genre_stats(one).at("Jazz&Blues");
  CHECK(j.std_min == 0.0);
  CHECK(j.std_max == 0.0);
}

TEST_CASE("genre_stats rejects empty input and names the bad record") {
  CHECK_THROWS_AS(genre_stats(std::vector<SongRecord>{}), InvalidInputError);
  std::vector<SongRecord> bad = {{"ok", "Pop", std::nullopt, 0.7, 1.2}, {"song-17", "Pop", std::nullopt, 1.2, 0.7}};
  try {
    genre_stats(bad);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("song-17") != std::string::npos);
  }
}

TEST_CASE("genre_stats recovers the moments of a moment-matched generator") {
  const auto pop = testing::reference_genre("Pop");
  const auto records = testing::synthetic_records({{"Pop", 100, pop.mean_min, pop.std_min, pop.mean_max, pop.std_max}}, 11);
  const auto s = genre_stats(records).at("Pop");
  CHECK(s.count == 100);
  CHECK(s.mean_min == Approx(pop.mean_min).margin(1e-12));
  CHECK(s.std_min == Approx(pop.std_min).margin(1e-12));
  CHECK(s.mean_max == Approx(pop.mean_max).margin(1e-12));
  CHECK(s.std_max == Approx(pop.std_max).margin(1e-12));
}

TEST_CASE("genre_stats is invariant to record order") {
  auto records = testing::synthetic_records(testing::reference_stats(), 5);
  const auto reference = genre_stats(records);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    std::shuffle(records.begin(), records.end(), rng);
    const auto shuffled = genre_stats(records);
    for (const auto& [genre, s] : reference) {
      const auto& t = shuffled.at(genre);
      CHECK(t.mean_min == s.mean_min);
      CHECK(t.std_min == s.std_min);
      CHECK(t.mean_max == s.mean_max);
      CHECK(t.std_max == s.std_max);
    }
  }
}

TEST_CASE("msr_rectangle corners") {
  const auto pop = rect_of("Pop");
  CHECK(pop.x_lo == Approx(0.666).margin(1e-12));
  CHECK(pop.x_hi == Approx(0.804).margin(1e-12));
  CHECK(pop.y_lo == Approx(1.180).margin(1e-12));
  CHECK(pop.y_hi == Approx(1.312).margin(1e-12));

  const auto classical = rect_of("Classical");
  CHECK(classical.x_lo == Approx(0.493).margin(1e-12));
  CHECK(classical.x_hi == Approx(0.663).margin(1e-12));
  CHECK(classical.y_lo == Approx(1.297).margin(1e-12));
  CHECK(classical.y_hi == Approx(1.455).margin(1e-12));

  for (const auto& s : testing::reference_stats()) {
    CHECK(msr_rectangle(s).area() == Approx(4.0 * s.std_min * s.std_max).margin(1e-12));
  }

  const auto point = msr_rectangle({"X", 1, 0.7, 0.0, 1.3, 0.0});
  CHECK(point.area() == 0.0);
  CHECK_THROWS_AS(msr_rectangle({"X", 1, 0.7, -0.1, 1.3, 0.0}), ValidationError);
}

TEST_CASE("classify_point examples") {
  const auto pop = rect_of("Pop");
  auto p = classify_point(pop, 0.75, 1.22);
  CHECK(p.part == 5);
  CHECK(p.region == RegionClass::Transition);
  p = classify_point(pop, 0.85, 1.10);
  CHECK(p.part == 9);
  CHECK(p.region == RegionClass::Safe);
  p = classify_point(pop, 0.60, 1.40);
  CHECK(p.part == 1);
  CHECK(p.region == RegionClass::Dangerous);

  CHECK_THROWS_AS(classify_point(pop, 0.0, 1.2), DomainError);
  CHECK_THROWS_AS(classify_point(pop, 0.5, -1.0), DomainError);
}

TEST_CASE("classify_point puts threshold coordinates in the middle band") {
  const MsrRect r{0.5, 0.75, 1.25, 1.5};
  CHECK(classify_point(r, 0.5, 1.25).part == 5);
  CHECK(classify_point(r, 0.75, 1.5).part == 5);
  CHECK(classify_point(r, 0.75, 1.0).part == 8);
  CHECK(classify_point(r, 0.25, 1.5).part == 4);
}

TEST_CASE("partition is total on a dense grid and matches the cell layout") {
  std::mt19937_64 rng(21);
  std::vector<MsrRect> rects = {rect_of("Pop"), rect_of("Classical"), rect_of("Hip-hop&Rap")};
  for (int i = 0; i < 5; ++i) {
    auto r = random_rect(rng);
    r.y_lo += 1.0;
    r.y_hi += 1.0;
    rects.push_back(r);
  }
  for (const auto& rect : rects) {
    std::array<int, 10> hits{};
    for (int i = 0; i < 200; ++i) {
      for (int j = 0; j < 200; ++j) {
        const double x = (i + 0.5) / 200.0;
        const double y = 1.0 + (j + 0.5) / 200.0;
        const auto p = classify_point(rect, x, y);
        REQUIRE(p.part >= 1);
        REQUIRE(p.part <= 9);
        ++hits[p.part];
        const int col = x < rect.x_lo ? 1 : (x <= rect.x_hi ? 2 : 3);
        const int row = y > rect.y_hi ? 1 : (y >= rect.y_lo ? 2 : 3);
        REQUIRE(p.part == (row - 1) * 3 + col);
        const bool dangerous = row == 1 || col == 1;
        const bool safe = row == 3 && col == 3;
        REQUIRE((p.region == RegionClass::Dangerous) == dangerous);
        REQUIRE((p.region == RegionClass::Safe) == safe);
        if (p.region == RegionClass::Safe) {
          REQUIRE(x > rect.x_hi);
          REQUIRE(y < rect.y_lo);
        }
      }
    }
    int total = 0;
    for (int h : hits) total += h;
    CHECK(total == 200 * 200);
  }
}

TEST_CASE("region_class_of covers exactly the nine parts") {
  for (int part : {1, 2, 3, 4, 7}) CHECK(region_class_of(part) == RegionClass::Dangerous);
  for (int part : {5, 6, 8}) CHECK(region_class_of(part) == RegionClass::Transition);
  CHECK(region_class_of(9) == RegionClass::Safe);
  CHECK_THROWS_AS(region_class_of(0), DomainError);
  CHECK_THROWS_AS(region_class_of(10), DomainError);
}

TEST_CASE("rect_relation examples from reference moments") {
  CHECK(rect_relation(rect_of("R&B"), rect_of("Pop")) == RectRelation::Inclusion);
  CHECK(rect_relation(rect_of("Pop"), rect_of("R&B")) == RectRelation::Inclusion);
  CHECK(rect_relation(rect_of("Pop"), rect_of("Classical")) == RectRelation::Exclusion);
  CHECK(rect_relation(rect_of("Pop"), rect_of("Rock")) == RectRelation::Intersection);
  CHECK(rect_relation(rect_of("Hip-hop&Rap"), rect_of("Rock")) == RectRelation::Inclusion);
  const MsrRect a{0.1, 0.2, 1.1, 1.2};
  CHECK(rect_relation(a, a) == RectRelation::Inclusion);
  CHECK(rect_relation(a, {0.2, 0.3, 1.1, 1.2}) == RectRelation::Exclusion);
}

TEST_CASE("jaccard_similarity examples") {
  CHECK(jaccard_similarity(rect_of("Pop"), rect_of("Rock")) == Approx(0.713).margin(0.005));
  CHECK(jaccard_similarity(rect_of("Folk"), rect_of("Latin")) == Approx(0.808).margin(0.005));
  CHECK(jaccard_similarity(rect_of("Rock"), rect_of("Hip-hop&Rap")) == Approx(0.244).margin(0.005));
  CHECK(jaccard_similarity(rect_of("Pop"), rect_of("Pop")) == 1.0);
}

TEST_CASE("jaccard_similarity on degenerate rectangles") {
  const MsrRect point{0.7, 0.7, 1.3, 1.3};
  const MsrRect line{0.6, 0.8, 1.3, 1.3};
  const MsrRect box{0.6, 0.8, 1.2, 1.4};
  CHECK(jaccard_similarity(point, point) == 1.0);
  CHECK(jaccard_similarity(point, box) == 0.0);
  CHECK(jaccard_similarity(box, line) == 0.0);
  CHECK(jaccard_similarity(line, line) == 1.0);
}

TEST_CASE("jaccard_similarity invariants on random rectangles") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto a = random_rect(rng);
    const auto b = random_rect(rng);
    const double s = jaccard_similarity(a, b);
    REQUIRE(s == jaccard_similarity(b, a));
    REQUIRE(s >= 0.0);
    REQUIRE(s <= 1.0);
    REQUIRE((s == 0.0) == (rect_relation(a, b) == RectRelation::Exclusion));
    REQUIRE(jaccard_similarity(a, a) == 1.0);
    if (rect_relation(a, b) == RectRelation::Inclusion) {
      const double ratio = std::min(a.area(), b.area()) / std::max(a.area(), b.area());
      REQUIRE(s == Approx(ratio).epsilon(1e-12));
    }
  }
}

TEST_CASE("jaccard_similarity agrees with a Monte-Carlo area estimate") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int outside = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = random_rect(rng);
    const MsrRect b{std::max(0.0, a.x_lo - 0.3 * u(rng)), a.x_lo + u(rng) * 0.8, std::max(0.0, a.y_lo - 0.3 * u(rng)),
                    a.y_lo + u(rng) * 0.8};
    const double x0 = std::min(a.x_lo, b.x_lo), x1 = std::max(a.x_hi, b.x_hi);
    const double y0 = std::min(a.y_lo, b.y_lo), y1 = std::max(a.y_hi, b.y_hi);
    std::uniform_real_distribution<double> ux(x0, x1), uy(y0, y1);
    long in_both = 0, in_either = 0;
    for (int i = 0; i < 40000; ++i) {
      const double x = ux(rng), y = uy(rng);
      const bool in_a = x >= a.x_lo && x <= a.x_hi && y >= a.y_lo && y <= a.y_hi;
      const bool in_b = x >= b.x_lo && x <= b.x_hi && y >= b.y_lo && y <= b.y_hi;
      in_both += in_a && in_b;
      in_either += in_a || in_b;
    }
    REQUIRE(in_either > 0);
    const double estimate = static_cast<double>(in_both) / static_cast<double>(in_either);
    const double exact = jaccard_similarity(a, b);
    const double sigma = std::sqrt(std::max(exact * (1.0 - exact), 1e-6) / static_cast<double>(in_either));
    if (std::abs(estimate - exact) > 3.0 * sigma) ++outside;
  }
  // Roughly 0.3% of honest estimates fall outside 3 sigma.
  CHECK(outside <= 1);
}

TEST_CASE("similarity_matrix structure") {
  const auto stats = testing::reference_stats();
  const auto m = similarity_matrix(stats);
  REQUIRE(m.size() == 11);
  for (std::size_t i = 0; i < m.size(); ++i) {
    CHECK(m.at(i, i) == 1.0);
    for (std::size_t j = 0; j < m.size(); ++j) CHECK(m.at(i, j) == m.at(j, i));
  }
  const auto expected = testing::reference_similarity_upper();
  std::size_t k = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = i + 1; j < m.size(); ++j, ++k) {
      INFO(m.genres[i] << " vs " << m.genres[j]);
      CHECK(m.at(i, j) == Approx(expected[k]).margin(0.005));
    }
  }

  const std::size_t hh = 6;
  REQUIRE(m.genres[hh] == "Hip-hop&Rap");
  for (std::size_t j : {2u, 8u, 9u, 10u}) CHECK(m.at(hh, j) == 0.0);

  const std::vector<GenreStats> twins = {{"A", 3, 0.7, 0.05, 1.3, 0.05}, {"B", 3, 0.7, 0.05, 1.3, 0.05}};
  CHECK(similarity_matrix(twins).at(0, 1) == 1.0);
  CHECK_THROWS_AS(similarity_matrix(std::vector<GenreStats>{twins[0]}), InvalidInputError);
}

TEST_CASE("anova_one_way examples and degenerate cases") {
  const std::vector<std::vector<double>> groups = {{1, 2, 3}, {4, 5, 6}};
  const auto r = anova_one_way(groups);
  CHECK(r.f_value == 13.5);
  CHECK(r.df_between == 1);
  CHECK(r.df_within == 4);
  CHECK(r.p_value > 0.0);
  CHECK(r.p_value < 0.05);

  const std::vector<std::vector<double>> same = {{1, 2, 3}, {1, 2, 3}, {3, 2, 1}};
  CHECK(anova_one_way(same).f_value == 0.0);
  CHECK(anova_one_way(same).p_value == 1.0);

  const std::vector<std::vector<double>> flat = {{1, 1}, {2, 2}};
  const auto inf = anova_one_way(flat);
  CHECK(inf.f_infinite);
  CHECK(std::isinf(inf.f_value));
  CHECK(inf.p_value == 0.0);

  const std::vector<std::vector<double>> constant = {{2, 2}, {2, 2}};
  CHECK(anova_one_way(constant).f_value == 0.0);
  CHECK_FALSE(anova_one_way(constant).f_infinite);

  CHECK_THROWS_AS(anova_one_way(std::vector<std::vector<double>>{{1, 2}}), InvalidInputError);
  CHECK_THROWS_AS(anova_one_way(std::vector<std::vector<double>>{{1, 2}, {}}), InvalidInputError);
  CHECK_THROWS_AS(anova_one_way(std::vector<std::vector<double>>{{1}, {2}}), InvalidInputError);
}

TEST_CASE("anova_one_way matches a brute-force sum-of-squares oracle") {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> groups_dist(2, 8), size_dist(1, 30);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::vector<double>> groups(groups_dist(rng));
    for (auto& g : groups) {
      const double shift = noise(rng);
      g.resize(size_dist(rng));
      for (auto& x : g) x = shift + noise(rng);
    }
    std::size_t n = 0;
    for (const auto& g : groups) n += g.size();
    for (; n <= groups.size(); ++n) groups.front().push_back(noise(rng));
    const auto r = anova_one_way(groups);
    const double oracle = brute_force_f(groups);
    REQUIRE(r.f_value == Approx(oracle).epsilon(1e-9));
    REQUIRE(r.df_between == static_cast<int>(groups.size()) - 1);
    REQUIRE(r.df_within == static_cast<int>(n - groups.size()));
  }
}

TEST_CASE("anova on moment-matched genres gives 10 and 883 degrees of freedom") {
  const auto stats = testing::reference_stats();
  const auto records = testing::synthetic_records(stats, 894);
  REQUIRE(records.size() == 894);
  for (auto bound : {AlphaBound::Min, AlphaBound::Max}) {
    std::vector<std::vector<double>> groups;
    for (auto& [genre, values] : alpha_by_genre(records, bound)) groups.push_back(values);
    const auto r = anova_one_way(groups);
    CHECK(r.df_between == 10);
    CHECK(r.df_within == 883);
    CHECK(r.p_value < 0.001);
    CHECK(r.f_value > 10.0);
    CHECK(r.f_value < 1000.0);
  }
}

TEST_CASE("fit_line recovers an exact line") {
  const std::vector<double> xs = {100, 150, 200};
  const std::vector<double> ys = {0.70, 0.75, 0.80};
  const auto line = fit_line(xs, ys);
  CHECK(line.slope == Approx(1e-3).epsilon(1e-12));
  CHECK(line.intercept == Approx(0.6).epsilon(1e-12));
  CHECK(line.samples == 3);
  CHECK_THROWS_AS(fit_line(std::vector<double>{120, 120}, std::vector<double>{0.7, 0.8}), DomainError);
  CHECK_THROWS_AS(fit_line(std::vector<double>{120}, std::vector<double>{0.7}), DomainError);
}

TEST_CASE("fit_line matches the normal-equation oracle") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> tempo(60.0, 200.0);
  std::normal_distribution<double> noise(0.0, 0.05);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 5 + trial;
    std::vector<double> xs(n), ys(n);
    for (std::size_t i = 0; i < n; ++i) {
      xs[i] = tempo(rng);
      ys[i] = 0.7 + 2e-4 * xs[i] + noise(rng);
    }
    // [n  Sx ] [a]   [Sy ]
    // [Sx Sxx] [b] = [Sxy]  solved by Cramer's rule.
    long double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
      sx += xs[i];
      sy += ys[i];
      sxx += static_cast<long double>(xs[i]) * xs[i];
      sxy += static_cast<long double>(xs[i]) * ys[i];
    }
    const long double det = n * sxx - sx * sx;
    const double slope = static_cast<double>((n * sxy - sx * sy) / det);
    const double intercept = static_cast<double>((sxx * sy - sx * sxy) / det);
    const auto line = fit_line(xs, ys);
    REQUIRE(line.slope == Approx(slope).epsilon(1e-9));
    REQUIRE(line.intercept == Approx(intercept).epsilon(1e-9));
  }
}

TEST_CASE("regress_tempo_to_alpha handles missing and constant tempos per genre") {
  std::vector<SongRecord> records = {
      {"a", "Pop", 100.0, 0.70, 1.30}, {"b", "Pop", 150.0, 0.75, 1.25}, {"c", "Pop", 200.0, 0.80, 1.20},
      {"d", "Pop", std::nullopt, 0.10, 1.90}, {"e", "Rock", 120.0, 0.7, 1.2}, {"f", "Rock", 120.0, 0.8, 1.3},
  };
  const auto mins = regress_tempo_to_alpha(records, AlphaBound::Min);
  REQUIRE(mins.at("Pop").line);
  CHECK(mins.at("Pop").line->slope == Approx(1e-3).epsilon(1e-12));
  CHECK(mins.at("Pop").line->samples == 3);
  CHECK_FALSE(mins.at("Rock").line);
  CHECK_FALSE(mins.at("Rock").error.empty());
  const auto maxs = regress_tempo_to_alpha(records, AlphaBound::Max);
  CHECK(maxs.at("Pop").line->slope == Approx(-1e-3).epsilon(1e-12));
}

TEST_CASE("reference slopes shift alpha by less than 0.1 over 200 BPM") {
  double steepest = 0.0;
  for (const auto& row : testing::reference_rows()) {
    for (double slope : {row.slope_min, row.slope_max}) {
      CHECK(std::abs(slope) * 200.0 < 0.1);
      steepest = std::max(steepest, std::abs(slope));
    }
  }
  CHECK(steepest == 4.89e-4);
}

TEST_CASE("canonical_genre_order puts reference genres first") {
  const auto order = canonical_genre_order({"Zydeco", "Rock", "Pop", "Ambient"});
  CHECK(order == std::vector<std::string>{"Pop", "Rock", "Ambient", "Zydeco"});
}
