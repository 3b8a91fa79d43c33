#include "msr/judgments.hpp"

#include <algorithm>
#include <chrono>
#include <mutex>
#include <random>
#include <sstream>

#include "json.hpp"
#include "msr/errors.hpp"
#include "msr/stretch.hpp"

namespace msr {
namespace {

using nlohmann::json;

std::int64_t system_clock_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

const char* to_string(PackageStatus s) { return s == PackageStatus::Open ? "open" : "submitted"; }

json package_json(const Package& p) {
  return json{{"package_id", p.package_id},
              {"participant_id", p.participant_id},
              {"song_ids", p.song_ids},
              {"status", to_string(p.status)}};
}

Package package_from_json(const json& j) {
  Package p;
  p.package_id = j.at("package_id").get<std::string>();
  p.participant_id = j.at("participant_id").get<std::string>();
  p.song_ids = j.at("song_ids").get<std::vector<std::string>>();
  p.status = j.value("status", std::string("open")) == "submitted" ? PackageStatus::Submitted
                                                                    : PackageStatus::Open;
  return p;
}

json judgment_json(const Judgment& j) {
  return json{{"participant_id", j.participant_id}, {"song_id", j.song_id},
              {"alpha_min", j.alpha_min},           {"alpha_max", j.alpha_max},
              {"revision", j.revision},             {"ts", j.submitted_at}};
}

Judgment judgment_from_json(const json& j) {
  Judgment out;
  out.participant_id = j.at("participant_id").get<std::string>();
  out.song_id = j.at("song_id").get<std::string>();
  out.alpha_min = j.at("alpha_min").get<double>();
  out.alpha_max = j.at("alpha_max").get<double>();
  out.revision = j.at("revision").get<int>();
  out.submitted_at = j.at("ts").get<std::int64_t>();
  return out;
}

}  // namespace

void validate_judgment_values(double alpha_min, double alpha_max) {
  if (!(alpha_min > 0.0 && alpha_min < 1.0)) {
    throw ValidationError("alpha_min_range", "alpha_min must lie in (0, 1)");
  }
  if (!(alpha_max > 1.0 && alpha_max < 2.0)) {
    throw ValidationError("alpha_max_range", "alpha_max must lie in (1, 2)");
  }
  if (!is_on_rate_grid(alpha_min)) {
    throw ValidationError("alpha_min_grid", "alpha_min must be a multiple of 0.02");
  }
  if (!is_on_rate_grid(alpha_max)) {
    throw ValidationError("alpha_max_grid", "alpha_max must be a multiple of 0.02");
  }
}

Package draw_package(const std::string& participant_id, const std::string& package_id,
                     std::span<const std::string> catalog, const std::set<std::string>& excluded,
                     std::uint64_t seed) {
  std::vector<std::string> pool;
  std::set<std::string> seen;
  for (const auto& id : catalog) {
    if (!excluded.contains(id) && seen.insert(id).second) pool.push_back(id);
  }
  if (pool.size() < kPackageSize) {
    throw InvalidInputError("participant '" + participant_id + "' has only " + std::to_string(pool.size()) +
                            " unheard songs left; a package needs " + std::to_string(kPackageSize));
  }
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates: the first kPackageSize slots become a uniform ordered sample.
  for (std::size_t i = 0; i < kPackageSize; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(kPackageSize);
  return Package{package_id, participant_id, std::move(pool), PackageStatus::Open};
}

ExperimentStore::ExperimentStore(std::filesystem::path journal, Clock clock)
    : journal_(std::move(journal)), clock_(clock ? std::move(clock) : Clock(system_clock_ms)) {
  if (journal_.empty()) return;
  replay();
  writer_.open(journal_, std::ios::binary | std::ios::app);
  if (!writer_) throw InvalidInputError("cannot open journal " + journal_.string());
}

std::filesystem::path ExperimentStore::snapshot_path() const {
  auto p = journal_;
  p += ".snapshot";
  return p;
}

void ExperimentStore::replay() {
  std::size_t skip = 0;
  if (std::ifstream snap(snapshot_path(), std::ios::binary); snap) {
    json doc = json::parse(snap, nullptr, /*allow_exceptions=*/false);
    if (doc.is_object() && doc.contains("journal_entries")) {
      skip = doc["journal_entries"].get<std::size_t>();
      for (const auto& p : doc.value("participants", json::array())) apply_participant(p.get<std::string>());
      for (const auto& p : doc.value("packages", json::array())) apply_package(package_from_json(p));
      for (const auto& j : doc.value("judgments", json::array())) apply_judgment(judgment_from_json(j));
    }
  }

  std::ifstream in(journal_, std::ios::binary);
  if (!in) {
    events_ = skip;
    return;
  }
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t line_index = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    const auto nl = content.find('\n', pos);
    // An unterminated final line is a torn write; it was never acknowledged.
    if (nl == std::string::npos) break;
    std::string line = content.substr(pos, nl - pos);
    pos = nl + 1;
    if (line.empty()) continue;
    if (line_index++ < skip) continue;
    apply_line(line);
  }
  events_ = std::max(skip, line_index);
  if (pos < content.size()) {
    // Drop the torn tail so later appends start on a fresh line.
    std::filesystem::resize_file(journal_, pos);
  }
}

void ExperimentStore::apply_line(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw InvalidInputError("corrupt journal line: " + line);
  }
  const std::string event = j.value("event", std::string{});
  if (event.empty()) {
    apply_judgment(judgment_from_json(j));
  } else if (event == "participant") {
    apply_participant(j.at("participant_id").get<std::string>());
  } else if (event == "package") {
    apply_package(package_from_json(j));
  } else if (event == "submit") {
    apply_submit(j.at("package_id").get<std::string>());
  } else {
    throw InvalidInputError("unknown journal event '" + event + "'");
  }
}

void ExperimentStore::append(const std::string& line) {
  ++events_;
  if (!writer_.is_open()) return;
  writer_ << line << '\n';
  writer_.flush();
  if (!writer_) throw InvalidInputError("failed appending to journal " + journal_.string());
}

void ExperimentStore::apply_participant(const std::string& id) { participants_.insert(id); }

void ExperimentStore::apply_package(Package p) {
  participants_.insert(p.participant_id);
  auto& list = packages_by_participant_[p.participant_id];
  if (std::find(list.begin(), list.end(), p.package_id) == list.end()) list.push_back(p.package_id);
  std::string id = p.package_id;
  packages_.insert_or_assign(std::move(id), std::move(p));
}

void ExperimentStore::apply_submit(const std::string& package_id) {
  auto it = packages_.find(package_id);
  if (it != packages_.end()) it->second.status = PackageStatus::Submitted;
}

void ExperimentStore::apply_judgment(Judgment j) {
  judgments_[PairKey{j.participant_id, j.song_id}].push_back(std::move(j));
}

void ExperimentStore::register_participant(const std::string& participant_id) {
  if (participant_id.empty()) throw ValidationError("participant_id", "participant_id must be non-empty");
  std::unique_lock lock(mutex_);
  if (participants_.contains(participant_id)) return;
  append(json{{"event", "participant"}, {"participant_id", participant_id}, {"ts", clock_()}}.dump());
  apply_participant(participant_id);
}

bool ExperimentStore::has_participant(const std::string& participant_id) const {
  std::shared_lock lock(mutex_);
  return participants_.contains(participant_id);
}

Package ExperimentStore::assign_package(const std::string& participant_id,
                                        std::span<const std::string> catalog, std::uint64_t seed) {
  if (participant_id.empty()) throw ValidationError("participant_id", "participant_id must be non-empty");
  std::unique_lock lock(mutex_);
  std::set<std::string> delivered;
  const auto& ids = packages_by_participant_[participant_id];
  for (const auto& pid : ids) {
    const auto& songs = packages_.at(pid).song_ids;
    delivered.insert(songs.begin(), songs.end());
  }
  const std::string package_id = participant_id + "-" + std::to_string(ids.size() + 1);
  Package p = draw_package(participant_id, package_id, catalog, delivered, seed);
  json line = package_json(p);
  line["event"] = "package";
  line["ts"] = clock_();
  append(line.dump());
  apply_package(p);
  return p;
}

Judgment ExperimentStore::record_judgment(const std::string& participant_id, const std::string& song_id,
                                          double alpha_min, double alpha_max) {
  validate_judgment_values(alpha_min, alpha_max);
  std::unique_lock lock(mutex_);
  bool assigned = false;
  bool open = false;
  if (auto it = packages_by_participant_.find(participant_id); it != packages_by_participant_.end()) {
    for (const auto& pid : it->second) {
      const Package& p = packages_.at(pid);
      if (std::find(p.song_ids.begin(), p.song_ids.end(), song_id) == p.song_ids.end()) continue;
      assigned = true;
      open = open || p.status == PackageStatus::Open;
    }
  }
  if (!assigned) {
    throw ValidationError("song_assigned", "song '" + song_id + "' is not in any package of participant '" +
                                               participant_id + "'");
  }
  if (!open) throw StateError("package holding song '" + song_id + "' has been submitted");

  const auto& revisions = judgments_[PairKey{participant_id, song_id}];
  Judgment j{participant_id, song_id, alpha_min, alpha_max,
             revisions.empty() ? 1 : revisions.back().revision + 1, clock_()};
  append(judgment_json(j).dump());
  apply_judgment(j);
  return j;
}

Package ExperimentStore::submit_package(const std::string& package_id) {
  std::unique_lock lock(mutex_);
  auto it = packages_.find(package_id);
  if (it == packages_.end()) throw NotFoundError("unknown package '" + package_id + "'");
  if (it->second.status == PackageStatus::Submitted) {
    throw StateError("package '" + package_id + "' was already submitted");
  }
  append(json{{"event", "submit"}, {"package_id", package_id}, {"ts", clock_()}}.dump());
  apply_submit(package_id);
  return it->second;
}

std::optional<Package> ExperimentStore::package(const std::string& package_id) const {
  std::shared_lock lock(mutex_);
  auto it = packages_.find(package_id);
  if (it == packages_.end()) return std::nullopt;
  return it->second;
}

std::vector<Package> ExperimentStore::packages_of(const std::string& participant_id) const {
  std::shared_lock lock(mutex_);
  std::vector<Package> out;
  if (auto it = packages_by_participant_.find(participant_id); it != packages_by_participant_.end()) {
    for (const auto& pid : it->second) out.push_back(packages_.at(pid));
  }
  return out;
}

std::optional<Package> ExperimentStore::open_package_of(const std::string& participant_id) const {
  for (auto& p : packages_of(participant_id)) {
    if (p.status == PackageStatus::Open) return p;
  }
  return std::nullopt;
}

std::vector<Judgment> ExperimentStore::history(const std::string& participant_id,
                                               const std::string& song_id) const {
  std::shared_lock lock(mutex_);
  auto it = judgments_.find(PairKey{participant_id, song_id});
  return it == judgments_.end() ? std::vector<Judgment>{} : it->second;
}

std::map<std::string, std::vector<Judgment>> ExperimentStore::latest_by_song() const {
  std::shared_lock lock(mutex_);
  std::map<std::string, std::vector<Judgment>> out;
  for (const auto& [key, revisions] : judgments_) {
    if (!revisions.empty()) out[key.song_id].push_back(revisions.back());
  }
  return out;
}

std::size_t ExperimentStore::event_count() const {
  std::shared_lock lock(mutex_);
  return events_;
}

void ExperimentStore::compact() {
  std::unique_lock lock(mutex_);
  if (journal_.empty()) return;
  json doc;
  doc["journal_entries"] = events_;
  doc["participants"] = participants_;
  doc["packages"] = json::array();
  for (const auto& [id, p] : packages_) doc["packages"].push_back(package_json(p));
  doc["judgments"] = json::array();
  for (const auto& [key, revisions] : judgments_) {
    if (!revisions.empty()) doc["judgments"].push_back(judgment_json(revisions.back()));
  }
  auto tmp = snapshot_path();
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInputError("cannot write snapshot " + tmp.string());
    out << doc.dump(1) << '\n';
  }
  std::filesystem::rename(tmp, snapshot_path());
}

}  // namespace msr
