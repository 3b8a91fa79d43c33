#include "msr/analytics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "msr/errors.hpp"
#include "msr/special_functions.hpp"

namespace msr {
namespace {

std::string describe(const SongRecord& r) { return "record '" + r.song_id + "'"; }

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double population_std(const std::vector<double>& v, double mean) {
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

double overlap_length(double lo_a, double hi_a, double lo_b, double hi_b) {
  const double len = std::min(hi_a, hi_b) - std::max(lo_a, lo_b);
  return len > kGeometryTolerance ? len : 0.0;
}

// 0 below the band, 1 inside the closed band, 2 above it.
int band(double v, double lo, double hi) {
  if (v < lo) return 0;
  if (v > hi) return 2;
  return 1;
}

}  // namespace

void SongRecord::validate() const {
  if (song_id.empty()) throw ValidationError("song_id", "record has an empty song_id");
  if (genre.empty()) throw ValidationError("genre", describe(*this) + " has an empty genre");
  if (!(alpha_min > 0.0 && alpha_min < 1.0)) {
    throw ValidationError("alpha_min_range", describe(*this) + ": alpha_min must lie in (0, 1)");
  }
  if (!(alpha_max > 1.0 && alpha_max < 2.0)) {
    throw ValidationError("alpha_max_range", describe(*this) + ": alpha_max must lie in (1, 2)");
  }
  if (tempo_bpm && !(*tempo_bpm > 0.0 && std::isfinite(*tempo_bpm))) {
    throw ValidationError("tempo_positive", describe(*this) + ": tempo_bpm must be positive");
  }
}

void GenreStats::validate() const {
  if (count < 1) throw ValidationError("count", "genre '" + genre + "' has no records");
  if (!(std_min >= 0.0) || !(std_max >= 0.0)) {
    throw ValidationError("std_nonnegative", "genre '" + genre + "' has a negative deviation");
  }
  if (!(mean_min < mean_max)) {
    throw ValidationError("mean_order", "genre '" + genre + "' needs mean_min < mean_max");
  }
}

bool MsrRect::contains(const MsrRect& o) const noexcept {
  return o.x_lo >= x_lo - kGeometryTolerance && o.x_hi <= x_hi + kGeometryTolerance &&
         o.y_lo >= y_lo - kGeometryTolerance && o.y_hi <= y_hi + kGeometryTolerance;
}

bool MsrRect::approx_equal(const MsrRect& o) const noexcept { return contains(o) && o.contains(*this); }

std::map<std::string, GenreStats> genre_stats(std::span<const SongRecord> records) {
  if (records.empty()) throw InvalidInputError("genre_stats needs at least one record");
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_genre;
  for (const auto& r : records) {
    r.validate();
    auto& [mins, maxs] = by_genre[r.genre];
    mins.push_back(r.alpha_min);
    maxs.push_back(r.alpha_max);
  }
  std::map<std::string, GenreStats> out;
  for (auto& [genre, values] : by_genre) {
    auto& [mins, maxs] = values;
    // Sorting makes the sums independent of record order.
    std::sort(mins.begin(), mins.end());
    std::sort(maxs.begin(), maxs.end());
    GenreStats s;
    s.genre = genre;
    s.count = mins.size();
    s.mean_min = mean_of(mins);
    s.std_min = population_std(mins, s.mean_min);
    s.mean_max = mean_of(maxs);
    s.std_max = population_std(maxs, s.mean_max);
    out.emplace(genre, std::move(s));
  }
  return out;
}

MsrRect msr_rectangle(const GenreStats& stats) {
  stats.validate();
  return MsrRect{stats.mean_min - stats.std_min, stats.mean_min + stats.std_min,
                 stats.mean_max - stats.std_max, stats.mean_max + stats.std_max};
}

RegionClass region_class_of(int part) {
  switch (part) {
    case 1: case 2: case 3: case 4: case 7:
      return RegionClass::Dangerous;
    case 5: case 6: case 8:
      return RegionClass::Transition;
    case 9:
      return RegionClass::Safe;
    default:
      throw DomainError("region part must be in 1..9");
  }
}

RegionPart classify_point(const MsrRect& rect, double alpha_min, double alpha_max) {
  if (!(alpha_min > 0.0 && alpha_max > 0.0) || !std::isfinite(alpha_min) || !std::isfinite(alpha_max)) {
    throw DomainError("point must lie in the open first quadrant");
  }
  const int column = band(alpha_min, rect.x_lo, rect.x_hi);
  const int row = 2 - band(alpha_max, rect.y_lo, rect.y_hi);  // top row first
  RegionPart p;
  p.part = row * 3 + column + 1;
  p.region = region_class_of(p.part);
  return p;
}

RectRelation rect_relation(const MsrRect& a, const MsrRect& b) {
  if (a.contains(b) || b.contains(a)) return RectRelation::Inclusion;
  const double w = overlap_length(a.x_lo, a.x_hi, b.x_lo, b.x_hi);
  const double h = overlap_length(a.y_lo, a.y_hi, b.y_lo, b.y_hi);
  if (w * h == 0.0) return RectRelation::Exclusion;
  return RectRelation::Intersection;
}

double jaccard_similarity(const MsrRect& a, const MsrRect& b) {
  const double area_a = a.area();
  const double area_b = b.area();
  if (area_a <= 0.0 || area_b <= 0.0) return a.approx_equal(b) ? 1.0 : 0.0;
  const double inter = overlap_length(a.x_lo, a.x_hi, b.x_lo, b.x_hi) *
                       overlap_length(a.y_lo, a.y_hi, b.y_lo, b.y_hi);
  const double uni = area_a + area_b - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

SimilarityMatrix similarity_matrix(std::span<const GenreStats> stats) {
  if (stats.size() < 2) throw InvalidInputError("similarity matrix needs at least two genres");
  std::vector<MsrRect> rects;
  rects.reserve(stats.size());
  SimilarityMatrix m;
  for (const auto& s : stats) {
    rects.push_back(msr_rectangle(s));
    m.genres.push_back(s.genre);
  }
  const std::size_t n = rects.size();
  m.values.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    m.values[i * n + i] = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = jaccard_similarity(rects[i], rects[j]);
      m.values[i * n + j] = s;
      m.values[j * n + i] = s;
    }
  }
  return m;
}

AnovaResult anova_one_way(std::span<const std::vector<double>> groups) {
  if (groups.size() < 2) throw InvalidInputError("ANOVA needs at least two groups");
  std::size_t total = 0;
  for (const auto& g : groups) {
    if (g.empty()) throw InvalidInputError("ANOVA groups must be non-empty");
    total += g.size();
  }
  if (total <= groups.size()) throw InvalidInputError("ANOVA needs more observations than groups");

  double grand_sum = 0.0;
  std::vector<double> means;
  means.reserve(groups.size());
  for (const auto& g : groups) {
    const double sum = std::accumulate(g.begin(), g.end(), 0.0);
    grand_sum += sum;
    means.push_back(sum / static_cast<double>(g.size()));
  }
  const double grand_mean = grand_sum / static_cast<double>(total);

  double ss_within = 0.0;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const auto& g = groups[i];
    if (std::all_of(g.begin(), g.end(), [&](double x) { return x == g.front(); })) continue;
    for (double x : g) ss_within += (x - means[i]) * (x - means[i]);
  }
  double ss_between = 0.0;
  if (!std::all_of(means.begin(), means.end(), [&](double m) { return m == means.front(); })) {
    for (std::size_t i = 0; i < groups.size(); ++i) {
      ss_between += static_cast<double>(groups[i].size()) * (means[i] - grand_mean) * (means[i] - grand_mean);
    }
  }

  AnovaResult r;
  r.df_between = static_cast<int>(groups.size() - 1);
  r.df_within = static_cast<int>(total - groups.size());
  if (ss_between == 0.0) {
    r.f_value = 0.0;
    r.p_value = 1.0;
    return r;
  }
  if (ss_within == 0.0) {
    r.f_value = std::numeric_limits<double>::infinity();
    r.f_infinite = true;
    r.p_value = 0.0;
    return r;
  }
  r.f_value = (ss_between / r.df_between) / (ss_within / r.df_within);
  r.p_value = f_distribution_upper_tail(r.f_value, r.df_between, r.df_within);
  return r;
}

std::map<std::string, std::vector<double>> alpha_by_genre(std::span<const SongRecord> records,
                                                          AlphaBound bound) {
  std::map<std::string, std::vector<double>> out;
  for (const auto& r : records) {
    r.validate();
    out[r.genre].push_back(bound == AlphaBound::Min ? r.alpha_min : r.alpha_max);
  }
  return out;
}

RegressionLine fit_line(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw InvalidInputError("regression needs paired samples");
  if (xs.size() < 2) throw DomainError("regression needs at least two points");
  const auto n = static_cast<double>(xs.size());
  const double x_mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double y_mean = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - x_mean) * (xs[i] - x_mean);
    sxy += (xs[i] - x_mean) * (ys[i] - y_mean);
  }
  if (!(sxx > 0.0)) throw DomainError("regression slope undefined: all tempos are equal");
  RegressionLine line;
  line.slope = sxy / sxx;
  line.intercept = y_mean - line.slope * x_mean;
  line.samples = xs.size();
  return line;
}

std::map<std::string, GenreRegression> regress_tempo_to_alpha(std::span<const SongRecord> records,
                                                              AlphaBound bound) {
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> points;
  for (const auto& r : records) {
    r.validate();
    auto& [xs, ys] = points[r.genre];
    if (!r.tempo_bpm) continue;
    xs.push_back(*r.tempo_bpm);
    ys.push_back(bound == AlphaBound::Min ? r.alpha_min : r.alpha_max);
  }
  std::map<std::string, GenreRegression> out;
  for (const auto& [genre, xy] : points) {
    GenreRegression g;
    try {
      g.line = fit_line(xy.first, xy.second);
    } catch (const DomainError& e) {
      g.error = e.what();
    }
    out.emplace(genre, std::move(g));
  }
  return out;
}

std::vector<std::string> canonical_genre_order(const std::vector<std::string>& genres) {
  static const std::array<const char*, 11> kReference = {
      "Pop", "Rock", "Easy Listening", "Folk", "Latin", "Country",
      "Hip-hop&Rap", "R&B", "Jazz&Blues", "Classical", "Electronic"};
  std::set<std::string> remaining(genres.begin(), genres.end());
  std::vector<std::string> out;
  for (const char* name : kReference) {
    if (remaining.erase(name)) out.emplace_back(name);
  }
  out.insert(out.end(), remaining.begin(), remaining.end());
  return out;
}

const char* to_string(RectRelation relation) noexcept {
  switch (relation) {
    case RectRelation::Inclusion: return "inclusion";
    case RectRelation::Exclusion: return "exclusion";
    case RectRelation::Intersection: return "intersection";
  }
  return "unknown";
}

const char* to_string(RegionClass region) noexcept {
  switch (region) {
    case RegionClass::Dangerous: return "dangerous";
    case RegionClass::Transition: return "transition";
    case RegionClass::Safe: return "safe";
  }
  return "unknown";
}

const char* to_string(AlphaBound bound) noexcept {
  return bound == AlphaBound::Min ? "alpha_min" : "alpha_max";
}

}  // namespace msr
