#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "msr/analytics.hpp"

namespace msr {

/// Header line of the annotation CSV.
inline constexpr std::string_view kAnnotationHeader = "song_id,genre,tempo_bpm,alpha_min,alpha_max";

/// Parses annotation CSV (RFC 4180 quoting, optional UTF-8 BOM, empty tempo
/// allowed). Every record is validated; errors cite the line number.
std::vector<SongRecord> parse_annotations_csv(std::string_view text);
std::vector<SongRecord> read_annotations_csv(const std::filesystem::path& path);

/// Writes shortest round-trip decimal representations, so re-parsing yields
/// identical records.
std::string format_annotations_csv(std::span<const SongRecord> records);
void write_annotations_csv(const std::filesystem::path& path, std::span<const SongRecord> records);

}  // namespace msr
