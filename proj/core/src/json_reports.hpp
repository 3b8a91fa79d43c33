#pragma once

// Internal: JSON builders shared by the report functions and the HTTP service.

#include <span>

#include "json.hpp"
#include "msr/analytics.hpp"

namespace msr::detail {

nlohmann::json to_json(const GenreStats& s);
nlohmann::json to_json(const MsrRect& r);
nlohmann::json to_json(const AnovaResult& r);
nlohmann::json to_json(const SongRecord& r);
nlohmann::json stats_json(std::span<const GenreStats> stats);
nlohmann::json rects_json(std::span<const GenreStats> stats);
nlohmann::json similarity_json(std::span<const GenreStats> stats);
nlohmann::json anova_json(std::span<const SongRecord> records);
nlohmann::json regression_json(std::span<const SongRecord> records);

}  // namespace msr::detail
