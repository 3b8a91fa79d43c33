#include "msr/service.hpp"

#include <atomic>
#include <cstdio>
#include <fstream>
#include <future>
#include <mutex>
#include <regex>

#include "httplib.h"
#include "json.hpp"
#include "json_reports.hpp"
#include "msr/errors.hpp"
#include "msr/reports.hpp"
#include "msr/wav.hpp"

namespace msr {
namespace {

using nlohmann::json;
using Bytes = std::vector<std::uint8_t>;

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 14695981039346656037ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

HttpResponse json_response(int status, const json& body) {
  return HttpResponse{status, "application/json", body.dump(), {}};
}

HttpResponse error_response(int status, const std::string& message, const std::string& rule = {}) {
  json body{{"error", message}};
  if (!rule.empty()) body["rule"] = rule;
  return json_response(status, body);
}

json package_json(const Package& p) {
  return json{{"package_id", p.package_id},
              {"participant_id", p.participant_id},
              {"song_ids", p.song_ids},
              {"status", p.status == PackageStatus::Open ? "open" : "submitted"}};
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot read " + path.string());
  return Bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

std::string cache_file_stem(const std::string& song_id) {
  std::string safe;
  for (char c : song_id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                    c == '_';
    safe += ok ? c : '_';
  }
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a(song_id)));
  return safe.substr(0, 48) + "-" + hash;
}

double require_number(const json& body, const char* key) {
  if (!body.contains(key) || !body[key].is_number()) {
    throw ValidationError(key, std::string("'") + key + "' must be a number");
  }
  return body[key].get<double>();
}

std::string require_string(const json& body, const char* key) {
  if (!body.contains(key) || !body[key].is_string() || body[key].get<std::string>().empty()) {
    throw ValidationError(key, std::string("'") + key + "' must be a non-empty string");
  }
  return body[key].get<std::string>();
}

}  // namespace

struct ExperimentService::Impl {
  Catalog catalog;
  std::unique_ptr<ExperimentStore> store;
  ServiceOptions options;

  std::mutex render_mutex;
  std::map<std::string, std::shared_future<std::shared_ptr<const Bytes>>> renders;
  std::atomic<std::size_t> render_count{0};

  std::mutex participant_mutex;
  httplib::Server server;

  AggregationMethod method_from(const HttpRequest& req) const {
    auto it = req.query.find("method");
    if (it == req.query.end()) return options.default_method;
    auto m = parse_aggregation_method(it->second);
    if (!m) throw ValidationError("method", "method must be mode, mean or median");
    return *m;
  }

  std::uint64_t package_seed(const std::string& participant, std::size_t index) const {
    return fnv1a(participant, options.seed ^ 0x9E3779B97F4A7C15ull) + index * 0x2545F4914F6CDD1Dull;
  }

  HttpResponse create_participant(const HttpRequest& req) {
    json body = req.body.empty() ? json::object() : json::parse(req.body);
    if (!body.is_object()) throw ValidationError("body", "request body must be a JSON object");
    std::lock_guard lock(participant_mutex);
    std::string id;
    if (body.contains("participant_id")) {
      id = require_string(body, "participant_id");
    } else {
      for (std::size_t n = 1;; ++n) {
        id = "participant-" + std::to_string(n);
        if (!store->has_participant(id)) break;
      }
    }
    store->register_participant(id);
    return json_response(201, json{{"participant_id", id}});
  }

  HttpResponse get_package(const std::string& participant) {
    if (!store->has_participant(participant)) throw NotFoundError("unknown participant '" + participant + "'");
    std::lock_guard lock(participant_mutex);
    if (auto open = store->open_package_of(participant)) return json_response(200, package_json(*open));
    const auto ids = catalog.song_ids();
    const std::size_t index = store->packages_of(participant).size();
    try {
      return json_response(201, package_json(store->assign_package(participant, ids, package_seed(participant, index))));
    } catch (const InvalidInputError& e) {
      throw StateError(e.what());
    }
  }

  HttpResponse post_judgment(const HttpRequest& req) {
    const json body = json::parse(req.body);
    if (!body.is_object()) throw ValidationError("body", "request body must be a JSON object");
    const Judgment j = store->record_judgment(require_string(body, "participant_id"),
                                              require_string(body, "song_id"),
                                              require_number(body, "alpha_min"),
                                              require_number(body, "alpha_max"));
    return json_response(201, json{{"participant_id", j.participant_id},
                                   {"song_id", j.song_id},
                                   {"alpha_min", j.alpha_min},
                                   {"alpha_max", j.alpha_max},
                                   {"revision", j.revision},
                                   {"ts", j.submitted_at}});
  }

  HttpResponse submit(const std::string& package_id) {
    return json_response(200, package_json(store->submit_package(package_id)));
  }

  HttpResponse aggregate(const HttpRequest& req) {
    const AggregationMethod method = method_from(req);
    json songs = json::array();
    for (const auto& [song_id, judgments] : store->latest_by_song()) {
      const auto agg = aggregate_judgments(judgments, method);
      const CatalogEntry* entry = catalog.find(song_id);
      songs.push_back(json{{"song_id", song_id},
                           {"genre", entry && !entry->genre.empty() ? json(entry->genre) : json(nullptr)},
                           {"alpha_min", agg.alpha_min},
                           {"alpha_max", agg.alpha_max},
                           {"judgments", agg.judgments}});
    }
    return json_response(200, json{{"method", to_string(method)}, {"songs", std::move(songs)}});
  }

  HttpResponse stats(const HttpRequest& req) {
    const AggregationMethod method = method_from(req);
    std::map<std::string, SongRecord> merged;
    for (const auto& r : options.annotations) merged.insert_or_assign(r.song_id, r);
    for (auto& r : aggregate_song_records(store->latest_by_song(), catalog, method)) {
      merged.insert_or_assign(r.song_id, std::move(r));
    }
    std::vector<SongRecord> records;
    for (auto& [id, r] : merged) records.push_back(std::move(r));

    json out{{"method", to_string(method)}, {"records", records.size()}};
    if (records.empty()) {
      out["stats"] = json::array();
      out["rectangles"] = json::array();
      out["similarity"] = nullptr;
      return json_response(200, out);
    }
    const auto ordered = ordered_stats(genre_stats(records));
    out["stats"] = detail::stats_json(ordered);
    out["rectangles"] = detail::rects_json(ordered);
    out["similarity"] = ordered.size() >= 2 ? detail::similarity_json(ordered) : json(nullptr);
    return json_response(200, out);
  }

  std::shared_ptr<const Bytes> synthesize(const CatalogEntry& entry, StretchRate rate,
                                         const std::string& key) {
    std::filesystem::path cached;
    if (!options.cache_dir.empty()) {
      cached = options.cache_dir / (key + ".wav");
      if (std::filesystem::exists(cached)) return std::make_shared<const Bytes>(read_file(cached));
    }
    const DecodedWav source = read_wav(entry.path);
    auto bytes = std::make_shared<const Bytes>(encode_wav(stretch(source.clip, rate, options.sola), source.format));
    ++render_count;
    if (!cached.empty()) {
      std::filesystem::create_directories(options.cache_dir);
      auto tmp = cached;
      tmp += ".tmp" + std::to_string(fnv1a(key + std::to_string(render_count.load())));
      {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out.write(reinterpret_cast<const char*>(bytes->data()), static_cast<std::streamsize>(bytes->size()));
      }
      std::filesystem::rename(tmp, cached);
    }
    return bytes;
  }

  std::shared_ptr<const Bytes> render(const CatalogEntry& entry, StretchRate rate) {
    char rate_text[16];
    std::snprintf(rate_text, sizeof rate_text, "%.2f", rate.value());
    const std::string key = cache_file_stem(entry.song_id) + "_" + rate_text + "_" + options.sola.fingerprint();

    std::promise<std::shared_ptr<const Bytes>> promise;
    std::shared_future<std::shared_ptr<const Bytes>> future;
    bool owner = false;
    {
      std::lock_guard lock(render_mutex);
      if (auto it = renders.find(key); it != renders.end()) {
        future = it->second;
      } else {
        future = promise.get_future().share();
        renders.emplace(key, future);
        owner = true;
      }
    }
    if (!owner) return future.get();

    try {
      promise.set_value(synthesize(entry, rate, key));
    } catch (...) {
      promise.set_exception(std::current_exception());
    }
    // With a disk cache only in-flight renders stay in memory; failures are never cached.
    bool failed = false;
    try {
      future.get();
    } catch (...) {
      failed = true;
    }
    if (failed || !options.cache_dir.empty()) {
      std::lock_guard lock(render_mutex);
      renders.erase(key);
    }
    return future.get();
  }

  std::vector<std::uint8_t> variant_bytes(const std::string& song_id, double rate) {
    const CatalogEntry* entry = catalog.find(song_id);
    if (!entry) throw NotFoundError("unknown song '" + song_id + "'");
    if (!is_on_rate_grid(rate) || !(rate > 0.0 && rate < 2.0)) {
      throw DomainError("rate must be a multiple of 0.02 in (0, 2)");
    }
    const StretchRate grid_rate = StretchRate::from_grid_steps(static_cast<int>(std::lround(rate * 50.0)));
    if (grid_rate.grid_steps() == 50) return read_file(entry->path);
    return *render(*entry, grid_rate);
  }

  HttpResponse variant(const std::string& song_id, const HttpRequest& req) {
    auto it = req.query.find("rate");
    if (it == req.query.end()) throw DomainError("missing 'rate' query parameter");
    double rate = 0.0;
    try {
      std::size_t used = 0;
      rate = std::stod(it->second, &used);
      if (used != it->second.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw DomainError("rate is not a number: '" + it->second + "'");
    }
    std::optional<double> position;
    if (auto pos = req.query.find("position_fraction"); pos != req.query.end()) {
      try {
        std::size_t used = 0;
        position = std::stod(pos->second, &used);
        if (used != pos->second.size()) throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        throw DomainError("position_fraction is not a number: '" + pos->second + "'");
      }
      if (!(*position >= 0.0 && *position < 1.0)) throw DomainError("position_fraction must lie in [0, 1)");
    }
    if (!catalog.find(song_id)) throw NotFoundError("unknown song '" + song_id + "'");
    const Bytes bytes = variant_bytes(song_id, rate);
    const WavLayout layout = inspect_wav(bytes);
    HttpResponse res{200, "audio/wav", std::string(bytes.begin(), bytes.end()), {}};
    res.headers["Accept-Ranges"] = "bytes";
    res.headers["X-Audio-Frames"] = std::to_string(layout.frame_count());
    res.headers["X-Sample-Rate"] = std::to_string(layout.sample_rate_hz);
    if (position) {
      // Offset of the sample frame at or before the requested position.
      const auto frame = static_cast<std::size_t>(std::floor(*position * static_cast<double>(layout.frame_count())));
      res.headers["X-Start-Offset"] = std::to_string(layout.data_offset + frame * layout.block_align);
    }
    return res;
  }

  HttpResponse route(const HttpRequest& req) {
    static const std::regex kPackage(R"(^/participants/([^/]+)/package$)");
    static const std::regex kSubmit(R"(^/packages/([^/]+)/submit$)");
    static const std::regex kVariant(R"(^/songs/([^/]+)/variant$)");
    std::smatch m;
    const bool get = req.method == "GET" || req.method == "HEAD";
    const bool post = req.method == "POST";

    if (post && req.path == "/participants") return create_participant(req);
    if (get && std::regex_match(req.path, m, kPackage)) return get_package(m[1].str());
    if (post && req.path == "/judgments") return post_judgment(req);
    if (post && std::regex_match(req.path, m, kSubmit)) return submit(m[1].str());
    if (get && req.path == "/results/aggregate") return aggregate(req);
    if (get && req.path == "/results/stats") return stats(req);
    if (get && std::regex_match(req.path, m, kVariant)) return variant(m[1].str(), req);
    return error_response(404, "no route for " + req.method + " " + req.path);
  }

  HttpResponse handle(const HttpRequest& req) {
    try {
      return route(req);
    } catch (const json::exception& e) {
      return error_response(400, std::string("malformed JSON body: ") + e.what());
    } catch (const ValidationError& e) {
      return error_response(422, e.what(), e.rule());
    } catch (const StateError& e) {
      return error_response(409, e.what());
    } catch (const NotFoundError& e) {
      return error_response(404, e.what());
    } catch (const DomainError& e) {
      return error_response(400, e.what());
    } catch (const InvalidInputError& e) {
      return error_response(500, e.what());
    } catch (const std::exception& e) {
      return error_response(500, e.what());
    }
  }
};

ExperimentService::ExperimentService(Catalog catalog, std::unique_ptr<ExperimentStore> store,
                                     ServiceOptions options)
    : impl_(std::make_unique<Impl>()) {
  if (!store) throw InvalidInputError("experiment service needs a store");
  options.sola.validate();
  for (const auto& r : options.annotations) r.validate();
  impl_->catalog = std::move(catalog);
  impl_->store = std::move(store);
  impl_->options = std::move(options);

  auto adapt = [this](const httplib::Request& req, httplib::Response& res) {
    HttpRequest r;
    r.method = req.method;
    r.path = req.path;
    for (const auto& [k, v] : req.params) r.query.emplace(k, v);
    r.body = req.body;
    HttpResponse out = impl_->handle(r);
    // httplib slices the body for Range requests only when the status is 206.
    res.status = out.status == 200 && !req.ranges.empty() ? 206 : out.status;
    for (const auto& [name, value] : out.headers) res.set_header(name, value);
    res.set_content(std::move(out.body), out.content_type);
  };
  auto& server = impl_->server;
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Expose-Headers",
                               "Content-Range, Accept-Ranges, X-Audio-Frames, X-Sample-Rate, X-Start-Offset"}});
  server.Get(".*", adapt);
  server.Post(".*", adapt);
  server.Options(".*", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type, Range");
    res.status = 204;
  });
}

ExperimentService::~ExperimentService() { stop(); }

HttpResponse ExperimentService::handle(const HttpRequest& request) { return impl_->handle(request); }

std::vector<std::uint8_t> ExperimentService::variant_bytes(const std::string& song_id, double rate) {
  return impl_->variant_bytes(song_id, rate);
}

std::size_t ExperimentService::render_count() const { return impl_->render_count.load(); }

ExperimentStore& ExperimentService::store() noexcept { return *impl_->store; }

const Catalog& ExperimentService::catalog() const noexcept { return impl_->catalog; }

int ExperimentService::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  if (!impl_->server.bind_to_port(host, port)) throw InvalidInputError("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void ExperimentService::listen() { impl_->server.listen_after_bind(); }

void ExperimentService::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace msr
