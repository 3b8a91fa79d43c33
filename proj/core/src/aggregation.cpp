#include "msr/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>

#include "msr/errors.hpp"

namespace msr {
namespace {

constexpr long kStepsPerUnit = 50;  // 1 / 0.02

long to_steps(double v) { return std::lround(v * static_cast<double>(kStepsPerUnit)); }
double from_steps(long steps) { return static_cast<double>(steps) / static_cast<double>(kStepsPerUnit); }

// Nearest grid step to a real position; exact halves go toward 1.0.
long snap(double steps) {
  const double lower = std::floor(steps);
  const double frac = steps - lower;
  if (frac < 0.5) return static_cast<long>(lower);
  if (frac > 0.5) return static_cast<long>(lower) + 1;
  const auto lo = static_cast<long>(lower);
  return std::abs(lo - kStepsPerUnit) <= std::abs(lo + 1 - kStepsPerUnit) ? lo : lo + 1;
}

double median_of_sorted(const std::vector<long>& v) {
  const std::size_t n = v.size();
  return n % 2 == 1 ? static_cast<double>(v[n / 2])
                    : 0.5 * static_cast<double>(v[n / 2 - 1] + v[n / 2]);
}

long mode_of(const std::vector<long>& steps) {
  std::map<long, std::size_t> counts;
  for (long s : steps) ++counts[s];
  std::size_t best = 0;
  for (const auto& [s, c] : counts) best = std::max(best, c);
  std::vector<long> tied;
  for (const auto& [s, c] : counts) {
    if (c == best) tied.push_back(s);
  }
  if (tied.size() % 2 == 1) return tied[tied.size() / 2];
  // An even number of distinct modes has a median between two of them, which
  // is never itself a mode; fall back to the most conservative tied value.
  return *std::min_element(tied.begin(), tied.end(), [](long a, long b) {
    return std::abs(a - kStepsPerUnit) < std::abs(b - kStepsPerUnit);
  });
}

}  // namespace

const char* to_string(AggregationMethod method) noexcept {
  switch (method) {
    case AggregationMethod::Mode: return "mode";
    case AggregationMethod::Mean: return "mean";
    case AggregationMethod::Median: return "median";
  }
  return "unknown";
}

std::optional<AggregationMethod> parse_aggregation_method(const std::string& name) {
  if (name == "mode") return AggregationMethod::Mode;
  if (name == "mean") return AggregationMethod::Mean;
  if (name == "median") return AggregationMethod::Median;
  return std::nullopt;
}

double aggregate_votes(std::span<const double> votes, AggregationMethod method) {
  if (votes.empty()) throw InvalidInputError("cannot aggregate an empty vote set");
  std::vector<long> steps;
  steps.reserve(votes.size());
  for (double v : votes) steps.push_back(to_steps(v));
  std::sort(steps.begin(), steps.end());
  const bool below = steps.back() < kStepsPerUnit && steps.front() > 0;
  const bool above = steps.front() > kStepsPerUnit && steps.back() < 2 * kStepsPerUnit;
  if (!below && !above) throw DomainError("votes must all lie in (0, 1) or all in (1, 2)");

  long result = 0;
  switch (method) {
    case AggregationMethod::Mode:
      result = mode_of(steps);
      break;
    case AggregationMethod::Mean: {
      double sum = 0.0;
      for (long s : steps) sum += static_cast<double>(s);
      result = snap(sum / static_cast<double>(steps.size()));
      break;
    }
    case AggregationMethod::Median:
      result = snap(median_of_sorted(steps));
      break;
  }
  return from_steps(result);
}

AggregatedAlpha aggregate_judgments(std::span<const Judgment> judgments, AggregationMethod method) {
  if (judgments.empty()) throw InvalidInputError("cannot aggregate a song without judgments");
  std::vector<double> mins, maxs;
  mins.reserve(judgments.size());
  maxs.reserve(judgments.size());
  for (const auto& j : judgments) {
    mins.push_back(j.alpha_min);
    maxs.push_back(j.alpha_max);
  }
  return AggregatedAlpha{aggregate_votes(mins, method), aggregate_votes(maxs, method), judgments.size()};
}

std::vector<SongRecord> aggregate_song_records(const std::map<std::string, std::vector<Judgment>>& by_song,
                                               const Catalog& catalog, AggregationMethod method) {
  std::vector<SongRecord> out;
  for (const auto& [song_id, judgments] : by_song) {
    const CatalogEntry* entry = catalog.find(song_id);
    if (!entry || entry->genre.empty() || judgments.empty()) continue;
    const auto agg = aggregate_judgments(judgments, method);
    out.push_back(SongRecord{song_id, entry->genre, entry->tempo_bpm, agg.alpha_min, agg.alpha_max});
  }
  return out;
}

}  // namespace msr
