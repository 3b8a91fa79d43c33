// Prints one PASS/FAIL line per acceptance criterion; exits non-zero on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "msr/aggregation.hpp"
#include "msr/analytics.hpp"
#include "msr/judgments.hpp"
#include "msr/stretch.hpp"
#include "msr/tempo.hpp"
#include "support/signals.hpp"
#include "support/synthetic.hpp"
#include "support/reference_genres.hpp"
#include "support/vote_oracle.hpp"

using namespace msr;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

Outcome similarity_matrix_reproduction() {
  Outcome o;
  const auto t0 = Clock::now();
  const auto stats = testing::reference_stats();
  const auto m = similarity_matrix(stats);
  const double elapsed = seconds_since(t0);
  const auto expected = testing::reference_similarity_upper();
  double worst = 0.0;
  std::size_t k = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    o.require(m.at(i, i) == 1.0, "diagonal entry is not exactly 1");
    for (std::size_t j = i + 1; j < m.size(); ++j, ++k) {
      const double err = std::abs(m.at(i, j) - expected[k]);
      worst = std::max(worst, err);
      o.require(err <= 0.005, m.genres[i] + " vs " + m.genres[j] + fmt(": %.4f", m.at(i, j)));
    }
  }
  o.require(k == 55, "expected 55 off-diagonal entries");
  o.require(elapsed < 1.0, fmt("took %.3f s", elapsed));
  if (o.pass) o.detail = fmt("55 entries, max |error| %.4f, %.2f ms", worst, elapsed * 1e3);
  return o;
}

Outcome relationship_taxonomy() {
  Outcome o;
  const auto stats = testing::reference_stats();
  std::vector<std::pair<std::string, std::string>> inclusions, exclusions;
  for (std::size_t i = 0; i < stats.size(); ++i) {
    for (std::size_t j = i + 1; j < stats.size(); ++j) {
      const auto rel = rect_relation(msr_rectangle(stats[i]), msr_rectangle(stats[j]));
      if (rel == RectRelation::Inclusion) inclusions.emplace_back(stats[i].genre, stats[j].genre);
      if (rel == RectRelation::Exclusion) exclusions.emplace_back(stats[i].genre, stats[j].genre);
    }
  }
  auto same_pairs = [](auto got, auto want) {
    auto norm = [](auto& v) {
      for (auto& [a, b] : v) {
        if (b < a) std::swap(a, b);
      }
      std::sort(v.begin(), v.end());
    };
    norm(got);
    norm(want);
    return got == want;
  };
  o.require(same_pairs(inclusions, testing::reference_inclusions()), "inclusion pairs differ");
  o.require(same_pairs(exclusions, testing::reference_exclusions()), "exclusion pairs differ");
  if (o.pass) o.detail = fmt("%g inclusion and %g exclusion pairs match", inclusions.size(), exclusions.size());
  return o;
}

Outcome sola_properties() {
  Outcome o;
  const auto t0 = Clock::now();
  constexpr int kRate = 22050;
  // Tone with two harmonics plus light noise, 10 s.
  auto base = testing::sine_clip(440.0, 10.0, kRate, 0.4);
  const auto noise = testing::noise_clip(10.0, kRate, 17);
  std::vector<float> samples(base.frame_count());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double t = static_cast<double>(i) / kRate;
    samples[i] = base.channel(0)[i] + 0.1f * static_cast<float>(std::sin(2.0 * std::numbers::pi * 880.0 * t)) +
                 0.05f * noise.channel(0)[i];
  }
  const auto clip = AudioClip::mono(std::move(samples), kRate);
  const auto geo = SolaGeometry::resolve({}, kRate);

  const auto grid = generate_variant_grid(clip, {}, 1);
  o.require(grid.size() == 98, fmt("grid has %g variants", grid.size()));
  double worst_frames = 0.0;
  for (const auto& [rate, out] : grid) {
    const double expected = rate.value() * static_cast<double>(clip.frame_count());
    const double err = std::abs(static_cast<double>(out.frame_count()) - expected);
    worst_frames = std::max(worst_frames, err / static_cast<double>(geo.frame));
    o.require(err <= static_cast<double>(geo.frame), fmt("rate %.2f duration off by %g samples", rate.value(), err));
  }

  double worst_pitch = 0.0;
  for (double r : {0.5, 0.8, 1.2, 1.5, 1.98}) {
    const auto& out = grid.at(StretchRate(r));
    const double f = testing::dominant_frequency(testing::middle_segment(out, 16384), kRate, 300.0, 600.0);
    const double rel = std::abs(f - 440.0) / 440.0;
    worst_pitch = std::max(worst_pitch, rel);
    o.require(rel <= 0.01, fmt("rate %.2f pitch %.2f Hz", r, f));
  }

  // The variant grid omits 1.00 (the original), so render it separately.
  const auto identity = stretch(clip, StretchRate(1.0));
  double worst_identity = 0.0;
  o.require(identity.frame_count() == clip.frame_count(), "rate 1.0 changed the length");
  for (std::size_t i = geo.frame; i + geo.frame < clip.frame_count(); ++i) {
    worst_identity = std::max(worst_identity, std::abs(static_cast<double>(identity.channel(0)[i]) - clip.channel(0)[i]));
  }
  o.require(worst_identity <= 1e-6, fmt("rate 1.0 deviates by %g", worst_identity));

  o.require(stretch(clip, StretchRate(1.0)) == identity, "rate 1.00 rerun differs");
  for (double r : {0.34, 1.62}) {
    o.require(stretch(clip, StretchRate(r)) == grid.at(StretchRate(r)), fmt("rate %.2f rerun differs", r));
  }

  const double elapsed = seconds_since(t0);
  o.require(elapsed < 30.0, fmt("took %.1f s", elapsed));
  if (o.pass) {
    o.detail = fmt("98 rates, max length error %.3g frames; pitch error <= %.3f%%; ", worst_frames, worst_pitch * 100.0) +
               fmt("identity %.1e; deterministic; %.1f s", worst_identity, elapsed);
  }
  return o;
}

Outcome tempo_consistency() {
  Outcome o;
  double worst = 0.0;
  for (double bpm : {60.0, 120.0, 180.0}) {
    const auto in = testing::click_track(bpm, 12.0);
    const double base = estimate_tempo(in).bpm;
    for (double r : {0.5, 0.8, 1.25}) {
      const double got = estimate_tempo(stretch(in, StretchRate(r))).bpm;
      // The estimator reports tempi folded into (0, 200], so compare in that range.
      const double want = fold_tempo(base / r);
      const double rel = std::abs(got - want) / want;
      worst = std::max(worst, rel);
      o.require(rel <= 0.03, fmt("%g BPM at r=%.2f: got %.2f", bpm, r, got) + fmt(" want %.2f", want));
    }
  }
  if (o.pass) o.detail = fmt("9 cases, max relative error %.2f%%", worst * 100.0);
  return o;
}

Outcome anova_correctness() {
  Outcome o;
  const std::vector<std::vector<double>> example = {{1, 2, 3}, {4, 5, 6}};
  const auto ex = anova_one_way(example);
  o.require(ex.f_value == 13.5 && ex.df_between == 1 && ex.df_within == 4, fmt("example F = %g", ex.f_value));

  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> groups_dist(2, 8), size_dist(2, 30);
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::vector<double>> groups(groups_dist(rng));
    for (auto& g : groups) {
      const double shift = normal(rng);
      g.resize(size_dist(rng));
      for (auto& x : g) x = shift + normal(rng);
    }
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
    const double oracle = static_cast<double>(((sst - ssw) / (k - 1)) / (ssw / (static_cast<long double>(n) - k)));
    const double rel = std::abs(anova_one_way(groups).f_value - oracle) / oracle;
    worst = std::max(worst, rel);
    o.require(rel <= 1e-9, fmt("trial %g relative error %g", trial, rel));
  }

  const auto records = testing::synthetic_records(testing::reference_stats(), 894);
  std::string synth;
  for (auto bound : {AlphaBound::Min, AlphaBound::Max}) {
    std::vector<std::vector<double>> groups;
    for (auto& [genre, values] : alpha_by_genre(records, bound)) groups.push_back(values);
    const auto r = anova_one_way(groups);
    o.require(records.size() == 894, "synthetic set is not 894 records");
    o.require(r.df_between == 10 && r.df_within == 883, fmt("df (%g, %g)", r.df_between, r.df_within));
    o.require(r.p_value < 0.001, fmt("p = %g", r.p_value));
    synth += std::string(to_string(bound)) + fmt(" F(%g, %g)=%.2f", r.df_between, r.df_within, r.f_value) +
             fmt(" p=%.1e; ", r.p_value);
  }
  if (o.pass) o.detail = "example 13.5; 100 oracle runs max rel err " + fmt("%.1e; ", worst) + synth;
  return o;
}

Outcome regression_correctness() {
  Outcome o;
  const std::vector<double> xs = {100, 150, 200}, ys = {0.70, 0.75, 0.80};
  const auto exact = fit_line(xs, ys);
  o.require(std::abs(exact.slope - 1e-3) <= 1e-15, fmt("collinear slope %.17g", exact.slope));

  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> tempo(60.0, 200.0);
  std::normal_distribution<double> noise(0.0, 0.05);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 5 + static_cast<std::size_t>(trial);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = tempo(rng);
      y[i] = 0.7 + 2e-4 * x[i] + noise(rng);
    }
    long double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
      sx += x[i];
      sy += y[i];
      sxx += static_cast<long double>(x[i]) * x[i];
      sxy += static_cast<long double>(x[i]) * y[i];
    }
    const long double det = n * sxx - sx * sx;
    const double slope = static_cast<double>((n * sxy - sx * sy) / det);
    const double intercept = static_cast<double>((sxx * sy - sx * sxy) / det);
    const auto line = fit_line(x, y);
    const double err = std::max(std::abs(line.slope - slope) / std::abs(slope),
                                std::abs(line.intercept - intercept) / std::abs(intercept));
    worst = std::max(worst, err);
    o.require(err <= 1e-9, fmt("trial %g relative error %g", trial, err));
  }

  double steepest = 0.0;
  for (const auto& row : testing::reference_rows()) {
    for (double s : {row.slope_min, row.slope_max}) {
      steepest = std::max(steepest, std::abs(s));
      o.require(std::abs(s) * 200.0 < 0.1, row.stats.genre + fmt(" slope %g", s));
    }
  }
  if (o.pass) {
    o.detail = fmt("exact line; oracle max rel err %.1e; steepest |slope|x200 = %.4f", worst, steepest * 200.0);
  }
  return o;
}

Outcome partition_suite() {
  Outcome o;
  std::vector<MsrRect> rects;
  for (const auto& s : testing::reference_stats()) rects.push_back(msr_rectangle(s));
  std::size_t points = 0;
  for (const auto& rect : rects) {
    std::array<std::size_t, 10> hits{};
    for (int i = 0; i < 200; ++i) {
      for (int j = 0; j < 200; ++j) {
        const double x = (i + 0.5) / 200.0;
        const double y = 1.0 + (j + 0.5) / 200.0;
        const auto p = classify_point(rect, x, y);
        ++points;
        if (p.part < 1 || p.part > 9) {
          o.require(false, "part out of range");
          continue;
        }
        ++hits[static_cast<std::size_t>(p.part)];
        const bool dangerous = p.part == 1 || p.part == 2 || p.part == 3 || p.part == 4 || p.part == 7;
        const bool transition = p.part == 5 || p.part == 6 || p.part == 8;
        o.require((p.region == RegionClass::Dangerous) == dangerous, "dangerous set mismatch");
        o.require((p.region == RegionClass::Transition) == transition, "transition set mismatch");
        o.require((p.region == RegionClass::Safe) == (p.part == 9), "safe set mismatch");
        if (p.region == RegionClass::Safe) o.require(x > rect.x_hi && y < rect.y_lo, "safe point outside its cell");
        const int col = x < rect.x_lo ? 0 : (x <= rect.x_hi ? 1 : 2);
        const int row = y > rect.y_hi ? 0 : (y >= rect.y_lo ? 1 : 2);
        o.require(p.part == row * 3 + col + 1, "part does not match its cell");
      }
    }
    std::size_t total = 0;
    for (auto h : hits) total += h;
    o.require(total == 200 * 200, "grid points lost");
  }
  if (o.pass) o.detail = fmt("%g points over %g rectangles, every point in exactly one part", points, rects.size());
  return o;
}

Outcome aggregation_and_persistence() {
  Outcome o;
  std::mt19937_64 rng(1234);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto votes = testing::random_votes(rng, trial % 2 == 0);
    o.require(aggregate_votes(votes) == testing::counting_oracle(votes), fmt("vote set %g disagrees", trial));
  }

  const auto dir = std::filesystem::temp_directory_path() / ("msr_acceptance_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto journal = dir / "journal.jsonl";
  std::vector<std::string> catalog;
  for (int i = 0; i < 60; ++i) catalog.push_back("song-" + std::to_string(i));
  std::map<std::string, std::vector<Judgment>> before;
  {
    ExperimentStore store(journal);
    std::uniform_int_distribution<int> lo(20, 49), hi(51, 80);
    for (int p = 0; p < 5; ++p) {
      const auto who = "p" + std::to_string(p);
      const auto pkg = store.assign_package(who, catalog, static_cast<std::uint64_t>(p));
      for (const auto& song : pkg.song_ids) {
        for (int rev = 0; rev < 2; ++rev) store.record_judgment(who, song, lo(rng) / 50.0, hi(rng) / 50.0);
      }
      if (p % 2 == 0) store.submit_package(pkg.package_id);
    }
    before = store.latest_by_song();
  }
  ExperimentStore replayed(journal);
  const auto after = replayed.latest_by_song();
  o.require(after == before, "replayed judgments differ");
  std::size_t songs = 0;
  for (const auto& [song, js] : before) {
    const auto a = aggregate_judgments(js);
    const auto b = aggregate_judgments(after.at(song));
    o.require(a.alpha_min == b.alpha_min && a.alpha_max == b.alpha_max, "aggregate differs after replay");
    ++songs;
  }
  std::filesystem::remove_all(dir);
  if (o.pass) o.detail = fmt("1000 vote sets match the counting oracle; %g songs identical after replay", songs);
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"similarity-matrix-reproduction", similarity_matrix_reproduction},
      {"relationship-taxonomy", relationship_taxonomy},
      {"sola-properties", sola_properties},
      {"tempo-rate-consistency", tempo_consistency},
      {"anova-correctness", anova_correctness},
      {"regression-correctness", regression_correctness},
      {"partition-suite", partition_suite},
      {"aggregation-persistence", aggregation_and_persistence},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    std::printf("[%s] %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
