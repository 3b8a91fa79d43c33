#include "msr/reports.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "json_reports.hpp"
#include "msr/errors.hpp"

namespace msr {
namespace detail {

using nlohmann::json;

namespace {

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

json to_json(const GenreStats& s) {
  return json{{"genre", s.genre},       {"count", s.count},       {"mean_min", s.mean_min},
              {"std_min", s.std_min},   {"mean_max", s.mean_max}, {"std_max", s.std_max}};
}

json to_json(const MsrRect& r) {
  return json{{"x_lo", r.x_lo}, {"x_hi", r.x_hi}, {"y_lo", r.y_lo}, {"y_hi", r.y_hi}, {"area", r.area()}};
}

json to_json(const AnovaResult& r) {
  return json{{"f_value", finite_or_null(r.f_value)},
              {"f_infinite", r.f_infinite},
              {"df_between", r.df_between},
              {"df_within", r.df_within},
              {"p_value", r.p_value}};
}

json to_json(const SongRecord& r) {
  return json{{"song_id", r.song_id},
              {"genre", r.genre},
              {"tempo_bpm", r.tempo_bpm ? json(*r.tempo_bpm) : json(nullptr)},
              {"alpha_min", r.alpha_min},
              {"alpha_max", r.alpha_max}};
}

json stats_json(std::span<const GenreStats> stats) {
  json out = json::array();
  for (const auto& s : stats) out.push_back(to_json(s));
  return out;
}

json rects_json(std::span<const GenreStats> stats) {
  json out = json::array();
  for (const auto& s : stats) {
    json item = to_json(msr_rectangle(s));
    item["genre"] = s.genre;
    out.push_back(std::move(item));
  }
  return out;
}

json similarity_json(std::span<const GenreStats> stats) {
  const SimilarityMatrix m = similarity_matrix(stats);
  json matrix = json::array();
  for (std::size_t i = 0; i < m.size(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < m.size(); ++j) row.push_back(m.at(i, j));
    matrix.push_back(std::move(row));
  }
  json relations = json::array();
  for (std::size_t i = 0; i < stats.size(); ++i) {
    for (std::size_t j = i + 1; j < stats.size(); ++j) {
      relations.push_back(json{{"a", stats[i].genre},
                               {"b", stats[j].genre},
                               {"relation", to_string(rect_relation(msr_rectangle(stats[i]),
                                                                    msr_rectangle(stats[j])))},
                               {"similarity", m.at(i, j)}});
    }
  }
  return json{{"genres", m.genres}, {"matrix", std::move(matrix)}, {"relations", std::move(relations)}};
}

json anova_json(std::span<const SongRecord> records) {
  json out = json::object();
  for (AlphaBound bound : {AlphaBound::Min, AlphaBound::Max}) {
    const auto groups_by_genre = alpha_by_genre(records, bound);
    std::vector<std::vector<double>> groups;
    for (const auto& [genre, values] : groups_by_genre) groups.push_back(values);
    out[to_string(bound)] = to_json(anova_one_way(groups));
  }
  return out;
}

json regression_json(std::span<const SongRecord> records) {
  json out = json::object();
  for (AlphaBound bound : {AlphaBound::Min, AlphaBound::Max}) {
    json per_genre = json::object();
    for (const auto& [genre, fit] : regress_tempo_to_alpha(records, bound)) {
      if (fit.line) {
        per_genre[genre] = json{{"slope", fit.line->slope},
                                {"intercept", fit.line->intercept},
                                {"samples", fit.line->samples},
                                {"max_shift_over_200_bpm", std::abs(fit.line->slope) * 200.0}};
      } else {
        per_genre[genre] = json{{"error", fit.error}};
      }
    }
    out[to_string(bound)] = std::move(per_genre);
  }
  return out;
}

}  // namespace detail

std::vector<GenreStats> ordered_stats(const std::map<std::string, GenreStats>& stats) {
  std::vector<std::string> names;
  for (const auto& [genre, s] : stats) names.push_back(genre);
  std::vector<GenreStats> out;
  for (const auto& name : canonical_genre_order(names)) out.push_back(stats.at(name));
  return out;
}

std::vector<GenreStats> parse_genre_stats_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInputError(std::string("genre stats are not valid JSON: ") + e.what());
  }
  if (!doc.is_array()) throw InvalidInputError("genre stats must be a JSON array");
  std::vector<GenreStats> out;
  try {
    for (const auto& item : doc) {
      GenreStats s;
      s.genre = item.at("genre").get<std::string>();
      s.count = item.value("count", std::size_t{1});
      s.mean_min = item.at("mean_min").get<double>();
      s.std_min = item.at("std_min").get<double>();
      s.mean_max = item.at("mean_max").get<double>();
      s.std_max = item.at("std_max").get<double>();
      s.validate();
      out.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInputError(std::string("malformed genre stats entry: ") + e.what());
  }
  return out;
}

std::string stats_report_json(std::span<const GenreStats> stats) { return detail::stats_json(stats).dump(2); }
std::string rects_report_json(std::span<const GenreStats> stats) { return detail::rects_json(stats).dump(2); }
std::string similarity_report_json(std::span<const GenreStats> stats) {
  return detail::similarity_json(stats).dump(2);
}
std::string anova_report_json(std::span<const SongRecord> records) { return detail::anova_json(records).dump(2); }
std::string regression_report_json(std::span<const SongRecord> records) {
  return detail::regression_json(records).dump(2);
}

std::string similarity_table(const SimilarityMatrix& matrix, std::span<const GenreStats> stats) {
  const std::size_t n = matrix.size();
  std::vector<MsrRect> rects;
  for (const auto& s : stats) rects.push_back(msr_rectangle(s));

  auto cell = [&](std::size_t i, std::size_t j) -> std::string {
    if (j < i) return "";
    const double v = matrix.at(i, j);
    char buf[32];
    if (v != 0.0 && v < 1e-3) {
      std::snprintf(buf, sizeof buf, "%.1e", v);
    } else {
      std::snprintf(buf, sizeof buf, "%.3f", v);
    }
    std::string text = buf;
    if (i == j || rects.size() != n) return text;
    switch (rect_relation(rects[i], rects[j])) {
      case RectRelation::Inclusion: return text + "*";
      case RectRelation::Exclusion: return text + "~";
      case RectRelation::Intersection: return text;
    }
    return text;
  };

  std::size_t label_width = 5;
  for (const auto& g : matrix.genres) label_width = std::max(label_width, g.size());
  std::vector<std::size_t> widths(n);
  for (std::size_t j = 0; j < n; ++j) {
    widths[j] = matrix.genres[j].size();
    for (std::size_t i = 0; i <= j; ++i) widths[j] = std::max(widths[j], cell(i, j).size());
  }

  auto pad = [](const std::string& s, std::size_t w, bool right) {
    const std::string fill(w > s.size() ? w - s.size() : 0, ' ');
    return right ? fill + s : s + fill;
  };
  std::string out = pad("Genre", label_width, false);
  for (std::size_t j = 0; j < n; ++j) out += "  " + pad(matrix.genres[j], widths[j], true);
  out += '\n';
  for (std::size_t i = 0; i < n; ++i) {
    std::string line = pad(matrix.genres[i], label_width, false);
    for (std::size_t j = 0; j < n; ++j) line += "  " + pad(cell(i, j), widths[j], true);
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + '\n';
  }
  out += "* inclusion  ~ exclusion\n";
  return out;
}

}  // namespace msr
