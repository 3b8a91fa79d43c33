#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace msr {

/// One annotated song: acceptable stretching range [alpha_min, alpha_max].
struct SongRecord {
  std::string song_id;
  std::string genre;
  std::optional<double> tempo_bpm;
  double alpha_min = 0.0;  // in (0, 1)
  double alpha_max = 0.0;  // in (1, 2)

  /// Throws ValidationError naming the record and the broken rule.
  void validate() const;

  friend bool operator==(const SongRecord&, const SongRecord&) = default;
};

/// Per-genre population moments of both bounds.
struct GenreStats {
  std::string genre;
  std::size_t count = 0;
  double mean_min = 0.0;
  double std_min = 0.0;
  double mean_max = 0.0;
  double std_max = 0.0;

  void validate() const;
};

/// Closed axis-aligned rectangle on the (alpha_min, alpha_max) plane.
struct MsrRect {
  double x_lo = 0.0;
  double x_hi = 0.0;
  double y_lo = 0.0;
  double y_hi = 0.0;

  double width() const noexcept { return x_hi - x_lo; }
  double height() const noexcept { return y_hi - y_lo; }
  double area() const noexcept { return width() * height(); }
  /// Closed containment of `other`, with coordinate tolerance kGeometryTolerance.
  bool contains(const MsrRect& other) const noexcept;
  bool approx_equal(const MsrRect& other) const noexcept;
};

/// Coordinates closer than this are considered coincident. Corners built from
/// three-decimal moments, such as 0.742 + 0.083 and 0.789 + 0.036, differ only by rounding.
inline constexpr double kGeometryTolerance = 1e-9;

enum class RectRelation { Inclusion, Exclusion, Intersection };
enum class RegionClass { Dangerous, Transition, Safe };

/// Cell of the 3x3 partition induced by a rectangle: rows top (largest
/// alpha_max) to bottom, columns left to right, numbered 1..9 row-major.
struct RegionPart {
  int part = 0;
  RegionClass region = RegionClass::Dangerous;
};

enum class AlphaBound { Min, Max };

struct AnovaResult {
  double f_value = 0.0;  // +inf when within-group variance is zero but groups differ
  int df_between = 0;
  int df_within = 0;
  double p_value = 1.0;
  bool f_infinite = false;
};

struct RegressionLine {
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t samples = 0;
};

/// Outcome of a per-genre fit: either a line or the reason none exists.
struct GenreRegression {
  std::optional<RegressionLine> line;
  std::string error;
};

struct SimilarityMatrix {
  std::vector<std::string> genres;
  std::vector<double> values;  // row-major, genres.size()^2

  std::size_t size() const noexcept { return genres.size(); }
  double at(std::size_t row, std::size_t col) const { return values.at(row * size() + col); }
};

/// Population mean and standard deviation of both bounds per genre.
/// Throws InvalidInputError on empty input and ValidationError on a bad record.
std::map<std::string, GenreStats> genre_stats(std::span<const SongRecord> records);

/// Rectangle (mean_min +- std_min) x (mean_max +- std_max).
MsrRect msr_rectangle(const GenreStats& stats);

RegionClass region_class_of(int part);

/// Coordinates equal to a rectangle edge belong to the middle band.
/// Throws DomainError for points outside the open first quadrant.
RegionPart classify_point(const MsrRect& rect, double alpha_min, double alpha_max);

RectRelation rect_relation(const MsrRect& a, const MsrRect& b);

/// Intersection area over union area. Zero-area rectangles score 1 against an
/// equal rectangle and 0 otherwise.
double jaccard_similarity(const MsrRect& a, const MsrRect& b);

/// Symmetric matrix of pairwise Jaccard similarities in the given genre order.
/// Throws InvalidInputError for fewer than two genres.
SimilarityMatrix similarity_matrix(std::span<const GenreStats> stats);

/// One-way ANOVA F test. Throws InvalidInputError unless there are at least
/// two non-empty groups and more observations than groups.
AnovaResult anova_one_way(std::span<const std::vector<double>> groups);

/// Groups one bound's values by genre, in genre-name order.
std::map<std::string, std::vector<double>> alpha_by_genre(std::span<const SongRecord> records,
                                                          AlphaBound bound);

/// Ordinary least squares fit. Throws DomainError when fewer than two points
/// are given or all abscissae are equal.
RegressionLine fit_line(std::span<const double> xs, std::span<const double> ys);

/// Per-genre regression of one bound on tempo. Records without a tempo are skipped.
std::map<std::string, GenreRegression> regress_tempo_to_alpha(std::span<const SongRecord> records,
                                                              AlphaBound bound);

/// The eleven reference genres in their customary order, then any others alphabetically.
std::vector<std::string> canonical_genre_order(const std::vector<std::string>& genres);

const char* to_string(RectRelation relation) noexcept;
const char* to_string(RegionClass region) noexcept;
const char* to_string(AlphaBound bound) noexcept;

}  // namespace msr
