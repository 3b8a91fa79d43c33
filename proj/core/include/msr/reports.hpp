#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "msr/analytics.hpp"

namespace msr {

/// Stats in canonical genre order (the eleven reference genres first).
std::vector<GenreStats> ordered_stats(const std::map<std::string, GenreStats>& stats);

/// Reads `[{"genre", "count", "mean_min", "std_min", "mean_max", "std_max"}, ...]`.
std::vector<GenreStats> parse_genre_stats_json(std::string_view text);

std::string stats_report_json(std::span<const GenreStats> stats);
std::string rects_report_json(std::span<const GenreStats> stats);
/// Matrix plus the pairwise relation of every distinct genre pair.
std::string similarity_report_json(std::span<const GenreStats> stats);
std::string anova_report_json(std::span<const SongRecord> records);
std::string regression_report_json(std::span<const SongRecord> records);

/// Upper half of the matrix as an aligned text table. Inclusion pairs are
/// marked with `*`, exclusion pairs with `~`.
std::string similarity_table(const SimilarityMatrix& matrix, std::span<const GenreStats> stats);

}  // namespace msr
