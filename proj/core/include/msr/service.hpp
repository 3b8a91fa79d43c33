#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "msr/aggregation.hpp"
#include "msr/analytics.hpp"
#include "msr/catalog.hpp"
#include "msr/judgments.hpp"
#include "msr/stretch.hpp"

namespace msr {

struct ServiceOptions {
  std::filesystem::path cache_dir;  // rendered variants; empty keeps them in memory
  SolaConfig sola;
  std::uint64_t seed = 0;  // mixed with participant id and package index
  AggregationMethod default_method = AggregationMethod::Mode;
  /// Pre-existing annotations. Aggregated judgments replace records with the
  /// same song_id when statistics are computed.
  std::vector<SongRecord> annotations;
};

struct HttpRequest {
  std::string method;  // "GET", "POST", ...
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
};

struct HttpResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
  std::map<std::string, std::string> headers;
};

/// Listening-experiment backend: package assignment, judgment collection,
/// aggregated results and lazily rendered stretched variants.
///
/// Routes:
///   POST /participants                       {"participant_id"?} -> 201
///   GET  /participants/{id}/package          open package, assigning one if needed
///   POST /judgments                          {"participant_id","song_id","alpha_min","alpha_max"} -> 201
///   POST /packages/{id}/submit               409 when already submitted
///   GET  /results/aggregate[?method=mode|mean|median]
///   GET  /results/stats[?method=...]         genre stats, rectangles, similarity matrix
///   GET  /songs/{id}/variant?rate=R[&position_fraction=P]
///                                            audio/wav; byte ranges honored by the HTTP layer.
///                                            X-Audio-Frames and X-Sample-Rate describe the
///                                            stream; X-Start-Offset is the byte offset of P.
///
/// Validation failures answer 422 with {"error","rule"}; state conflicts 409.
class ExperimentService {
 public:
  ExperimentService(Catalog catalog, std::unique_ptr<ExperimentStore> store, ServiceOptions options = {});
  ~ExperimentService();

  ExperimentService(const ExperimentService&) = delete;
  ExperimentService& operator=(const ExperimentService&) = delete;

  /// Routes one request. Thread-safe.
  HttpResponse handle(const HttpRequest& request);

  /// WAV bytes for a song at a rate; 1.00 returns the original file. Renders
  /// are cached under (song, rate, SOLA fingerprint) and concurrent requests
  /// for one key share a single render.
  std::vector<std::uint8_t> variant_bytes(const std::string& song_id, double rate);

  /// Number of variant renders performed (cache misses).
  std::size_t render_count() const;

  ExperimentStore& store() noexcept;
  const Catalog& catalog() const noexcept;

  /// Binds the HTTP listener; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop() is called. Requires a successful bind().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace msr
