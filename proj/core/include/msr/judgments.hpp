#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

namespace msr {

inline constexpr std::size_t kPackageSize = 20;

enum class PackageStatus { Open, Submitted };

/// Songs delivered to one participant in one batch.
struct Package {
  std::string package_id;
  std::string participant_id;
  std::vector<std::string> song_ids;
  PackageStatus status = PackageStatus::Open;

  friend bool operator==(const Package&, const Package&) = default;
};

/// One participant's reported bounds for one song, at one revision.
struct Judgment {
  std::string participant_id;
  std::string song_id;
  double alpha_min = 0.0;
  double alpha_max = 0.0;
  int revision = 0;
  std::int64_t submitted_at = 0;  // milliseconds since the Unix epoch

  friend bool operator==(const Judgment&, const Judgment&) = default;
};

/// Checks 0 < alpha_min < 1 < alpha_max < 2 and that both values sit on the
/// 0.02 stimulus grid. Throws ValidationError naming the rule.
void validate_judgment_values(double alpha_min, double alpha_max);

/// Samples kPackageSize distinct songs from `catalog` minus `excluded`,
/// uniformly without replacement, in random order. Deterministic for a given
/// seed. Throws InvalidInputError when fewer than kPackageSize songs remain.
Package draw_package(const std::string& participant_id, const std::string& package_id,
                     std::span<const std::string> catalog, const std::set<std::string>& excluded,
                     std::uint64_t seed);

/// Experiment state backed by an append-only journal of line-delimited JSON
/// events plus an optional compacted snapshot (`<journal>.snapshot`).
///
/// Judgment lines carry exactly participant_id, song_id, alpha_min, alpha_max,
/// revision and ts. Package, submission and participant events carry an
/// "event" key. Writes are serialized; reads may run concurrently.
///
/// A store opened with an empty path keeps everything in memory.
class ExperimentStore {
 public:
  using Clock = std::function<std::int64_t()>;

  explicit ExperimentStore(std::filesystem::path journal = {}, Clock clock = {});

  ExperimentStore(const ExperimentStore&) = delete;
  ExperimentStore& operator=(const ExperimentStore&) = delete;

  /// Idempotent.
  void register_participant(const std::string& participant_id);
  bool has_participant(const std::string& participant_id) const;

  /// Draws a fresh package that avoids every song already delivered to the participant.
  Package assign_package(const std::string& participant_id, std::span<const std::string> catalog,
                         std::uint64_t seed);

  /// Persists a new revision. Throws ValidationError for bad values or songs
  /// never delivered to the participant, StateError when every package holding
  /// the song has been submitted.
  Judgment record_judgment(const std::string& participant_id, const std::string& song_id,
                           double alpha_min, double alpha_max);

  /// Throws NotFoundError for unknown ids and StateError if already submitted.
  Package submit_package(const std::string& package_id);

  std::optional<Package> package(const std::string& package_id) const;
  std::vector<Package> packages_of(const std::string& participant_id) const;
  std::optional<Package> open_package_of(const std::string& participant_id) const;

  /// Revisions known for (participant, song), oldest first.
  std::vector<Judgment> history(const std::string& participant_id, const std::string& song_id) const;

  /// Latest revision of every (participant, song) pair, grouped by song.
  std::map<std::string, std::vector<Judgment>> latest_by_song() const;

  /// Number of events in the journal, including those folded into a snapshot.
  std::size_t event_count() const;

  /// Writes the current state to the snapshot file. Later opens load the
  /// snapshot and replay only newer journal lines; revisions superseded
  /// before compaction are then only available in the journal itself.
  void compact();

  const std::filesystem::path& journal_path() const noexcept { return journal_; }

 private:
  struct PairKey {
    std::string participant_id;
    std::string song_id;
    auto operator<=>(const PairKey&) const = default;
  };

  void replay();
  void apply_line(const std::string& line);
  void append(const std::string& line);
  void apply_participant(const std::string& id);
  void apply_package(Package p);
  void apply_submit(const std::string& package_id);
  void apply_judgment(Judgment j);
  std::filesystem::path snapshot_path() const;

  std::filesystem::path journal_;
  Clock clock_;
  std::ofstream writer_;
  mutable std::shared_mutex mutex_;

  std::set<std::string> participants_;
  std::map<std::string, Package> packages_;
  std::map<std::string, std::vector<std::string>> packages_by_participant_;
  std::map<PairKey, std::vector<Judgment>> judgments_;
  std::size_t events_ = 0;
};

}  // namespace msr
