// msrtool: stretch audio over the stimulus rate grid, analyze stretching
// resistance annotations, and serve the listening experiment.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "msr/aggregation.hpp"
#include "msr/catalog.hpp"
#include "msr/errors.hpp"
#include "msr/judgments.hpp"
#include "msr/records.hpp"
#include "msr/reports.hpp"
#include "msr/service.hpp"
#include "msr/stretch.hpp"
#include "msr/tempo.hpp"
#include "msr/wav.hpp"

namespace fs = std::filesystem;

namespace {

struct SolaFlags {
  msr::SolaConfig config;

  void attach(CLI::App* app) {
    app->add_option("--frame-ms", config.frame_ms, "SOLA frame length in ms")->capture_default_str();
    app->add_option("--overlap-ms", config.overlap_ms, "crossfade overlap in ms")->capture_default_str();
    app->add_option("--seek-ms", config.seek_window_ms, "offset search half-window in ms")->capture_default_str();
  }
};

std::optional<msr::SampleFormat> parse_format(const std::string& name) {
  if (name.empty()) return std::nullopt;
  if (name == "pcm16") return msr::SampleFormat::Pcm16;
  if (name == "float32") return msr::SampleFormat::Float32;
  throw CLI::ValidationError("--format", "expected pcm16 or float32");
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw msr::InvalidInputError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void emit(const std::string& text, const std::string& json_out) {
  if (json_out.empty()) {
    std::cout << text << '\n';
    return;
  }
  std::ofstream out(json_out, std::ios::binary | std::ios::trunc);
  if (!out) throw msr::InvalidInputError("cannot write " + json_out);
  out << text << '\n';
}

std::pair<std::string, int> split_addr(const std::string& addr) {
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos) throw CLI::ValidationError("--addr", "expected host:port");
  return {addr.substr(0, colon), std::stoi(addr.substr(colon + 1))};
}

msr::ExperimentService* g_service = nullptr;

extern "C" void handle_signal(int) {
  if (g_service) g_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-stretching, stretching-resistance analytics and listening-experiment service"};
  app.require_subcommand(1);

  // stretch
  std::string in_path, out_path, format_name;
  double rate = 1.0;
  SolaFlags stretch_sola;
  auto* stretch_cmd = app.add_subcommand("stretch", "Stretch one WAV file by a rate in (0, 2)");
  stretch_cmd->add_option("--in", in_path, "input WAV")->required()->check(CLI::ExistingFile);
  stretch_cmd->add_option("--rate", rate, "output/input duration ratio")->required();
  stretch_cmd->add_option("--out", out_path, "output WAV")->required();
  stretch_cmd->add_option("--format", format_name, "pcm16 or float32 (default: input format)");
  stretch_sola.attach(stretch_cmd);

  // grid
  std::string grid_in, grid_outdir, grid_format;
  unsigned threads = 0;
  SolaFlags grid_sola;
  auto* grid_cmd = app.add_subcommand("grid", "Render the 98 stimulus variants of a WAV file");
  grid_cmd->add_option("--in", grid_in, "input WAV")->required()->check(CLI::ExistingFile);
  grid_cmd->add_option("--outdir", grid_outdir, "output directory")->required();
  grid_cmd->add_option("--threads", threads, "worker threads (0 = all cores)");
  grid_cmd->add_option("--format", grid_format, "pcm16 or float32 (default: input format)");
  grid_sola.attach(grid_cmd);

  // analyze
  auto* analyze_cmd = app.add_subcommand("analyze", "Tempo estimation and stretching-resistance statistics");
  analyze_cmd->require_subcommand(1);
  std::string tempo_in;
  auto* tempo_cmd = analyze_cmd->add_subcommand("tempo", "Estimate the global tempo of a WAV file");
  tempo_cmd->add_option("--in", tempo_in, "input WAV")->required()->check(CLI::ExistingFile);

  std::string data_path, stats_path, json_out;
  bool as_table = false;
  auto add_data = [&](CLI::App* cmd, bool allow_stats) {
    auto* data = cmd->add_option("--data", data_path, "annotation CSV")->check(CLI::ExistingFile);
    if (allow_stats) {
      auto* stats = cmd->add_option("--stats", stats_path, "genre statistics JSON instead of records")
                        ->check(CLI::ExistingFile);
      data->excludes(stats);
      stats->excludes(data);
    } else {
      data->required();
    }
    cmd->add_option("--json", json_out, "write JSON here instead of stdout");
  };
  auto* stats_cmd = analyze_cmd->add_subcommand("stats", "Per-genre means and deviations");
  add_data(stats_cmd, true);
  auto* rects_cmd = analyze_cmd->add_subcommand("rects", "Per-genre rectangles");
  add_data(rects_cmd, true);
  auto* sim_cmd = analyze_cmd->add_subcommand("similarity", "Genre similarity matrix and relations");
  add_data(sim_cmd, true);
  sim_cmd->add_flag("--table", as_table, "print the half-matrix as aligned text");
  auto* anova_cmd = analyze_cmd->add_subcommand("anova", "One-way ANOVA of both bounds across genres");
  add_data(anova_cmd, false);
  auto* regression_cmd = analyze_cmd->add_subcommand("regression", "Per-genre tempo regression of both bounds");
  add_data(regression_cmd, false);

  // serve
  std::string catalog_path, journal_path, cache_dir, addr = "127.0.0.1:8080", annotations_path,
                                                      method_name = "mode";
  std::uint64_t seed = 0;
  SolaFlags serve_sola;
  auto* serve_cmd = app.add_subcommand("serve", "Run the listening-experiment HTTP service");
  serve_cmd->add_option("--catalog", catalog_path, "catalog manifest JSON")
      ->required()
      ->envname("MSR_CATALOG")
      ->check(CLI::ExistingFile);
  serve_cmd->add_option("--journal", journal_path, "judgment journal path")->required()->envname("MSR_JOURNAL");
  serve_cmd->add_option("--cache", cache_dir, "variant cache directory")->required()->envname("MSR_CACHE");
  serve_cmd->add_option("--addr", addr, "listen address host:port")->envname("MSR_ADDR")->capture_default_str();
  serve_cmd->add_option("--annotations", annotations_path, "seed annotation CSV")->check(CLI::ExistingFile);
  serve_cmd->add_option("--seed", seed, "package sampling seed")->envname("MSR_SEED");
  serve_cmd->add_option("--method", method_name, "default aggregation: mode, mean or median")
      ->check(CLI::IsMember({"mode", "mean", "median"}));
  serve_sola.attach(serve_cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*stretch_cmd) {
      const auto decoded = msr::read_wav(in_path);
      const auto out = msr::stretch(decoded.clip, msr::StretchRate(rate), stretch_sola.config);
      msr::write_wav(out_path, out, parse_format(format_name).value_or(decoded.format));
      std::printf("%s: %.3f s -> %.3f s\n", out_path.c_str(), decoded.clip.duration_seconds(),
                  out.duration_seconds());
    } else if (*grid_cmd) {
      const auto decoded = msr::read_wav(grid_in);
      const auto format = parse_format(grid_format).value_or(decoded.format);
      fs::create_directories(grid_outdir);
      const auto grid = msr::generate_variant_grid(decoded.clip, grid_sola.config, threads);
      const std::string base = fs::path(grid_in).stem().string();
      for (const auto& [r, clip] : grid) {
        char name[32];
        std::snprintf(name, sizeof name, "_%.2f.wav", r.value());
        msr::write_wav(fs::path(grid_outdir) / (base + name), clip, format);
      }
      std::printf("wrote %zu variants to %s\n", grid.size(), grid_outdir.c_str());
    } else if (*tempo_cmd) {
      const auto est = msr::estimate_tempo(msr::read_wav(tempo_in).clip);
      std::printf("{\"bpm\": %.3f, \"confidence\": %.4f}\n", est.bpm, est.confidence);
    } else if (*analyze_cmd) {
      std::vector<msr::SongRecord> records;
      std::vector<msr::GenreStats> stats;
      if (!stats_path.empty()) {
        stats = msr::parse_genre_stats_json(read_text(stats_path));
      } else if (!data_path.empty()) {
        records = msr::read_annotations_csv(data_path);
        stats = msr::ordered_stats(msr::genre_stats(records));
      } else {
        throw CLI::ValidationError("--data", "either --data or --stats is required");
      }
      if (*stats_cmd) {
        emit(msr::stats_report_json(stats), json_out);
      } else if (*rects_cmd) {
        emit(msr::rects_report_json(stats), json_out);
      } else if (*sim_cmd) {
        if (as_table) std::cout << msr::similarity_table(msr::similarity_matrix(stats), stats);
        if (!as_table || !json_out.empty()) emit(msr::similarity_report_json(stats), json_out);
      } else if (*anova_cmd) {
        emit(msr::anova_report_json(records), json_out);
      } else if (*regression_cmd) {
        emit(msr::regression_report_json(records), json_out);
      }
    } else if (*serve_cmd) {
      msr::ServiceOptions options;
      options.cache_dir = cache_dir;
      options.sola = serve_sola.config;
      options.seed = seed;
      options.default_method = *msr::parse_aggregation_method(method_name);
      if (!annotations_path.empty()) options.annotations = msr::read_annotations_csv(annotations_path);
      msr::ExperimentService service(msr::Catalog::load(catalog_path),
                                     std::make_unique<msr::ExperimentStore>(journal_path), std::move(options));
      const auto [host, port] = split_addr(addr);
      const int bound = service.bind(host, port);
      g_service = &service;
      std::signal(SIGINT, handle_signal);
      std::signal(SIGTERM, handle_signal);
      std::fprintf(stderr, "serving %zu songs on %s:%d\n", service.catalog().size(), host.c_str(), bound);
      service.listen();
      g_service = nullptr;
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const msr::ValidationError& e) {
    std::fprintf(stderr, "error [%s]: %s\n", e.rule().c_str(), e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
