#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "msr/analytics.hpp"
#include "msr/catalog.hpp"
#include "msr/judgments.hpp"

namespace msr {

enum class AggregationMethod {
  Mode,    // grid mode; ties -> median of tied modes if it is one, else tied value closest to 1.0
  Mean,    // arithmetic mean snapped to the grid
  Median,  // median snapped to the grid
};

const char* to_string(AggregationMethod method) noexcept;
std::optional<AggregationMethod> parse_aggregation_method(const std::string& name);

/// Combines one bound's votes into a single grid value. Votes are snapped to
/// the 0.02 grid first; results stay strictly on the same side of 1.0 as the
/// votes. Throws InvalidInputError for an empty vote set and DomainError when
/// votes straddle 1.0.
double aggregate_votes(std::span<const double> votes, AggregationMethod method = AggregationMethod::Mode);

struct AggregatedAlpha {
  double alpha_min = 0.0;
  double alpha_max = 0.0;
  std::size_t judgments = 0;
};

/// Aggregates each bound independently over the given judgments of one song.
AggregatedAlpha aggregate_judgments(std::span<const Judgment> judgments,
                                    AggregationMethod method = AggregationMethod::Mode);

/// One SongRecord per judged song, taking genre and tempo from the catalog.
/// Songs missing from the catalog or lacking a genre are skipped.
std::vector<SongRecord> aggregate_song_records(const std::map<std::string, std::vector<Judgment>>& by_song,
                                               const Catalog& catalog,
                                               AggregationMethod method = AggregationMethod::Mode);

}  // namespace msr
