#include "msr/catalog.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "msr/errors.hpp"

namespace msr {

Catalog Catalog::parse(std::string_view json_text, const std::filesystem::path& base_dir) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInputError(std::string("catalog manifest is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw InvalidInputError("catalog manifest must be a JSON object");

  Catalog catalog;
  for (const auto& [id, item] : doc.items()) {
    if (!item.is_object() || !item.contains("path") || !item["path"].is_string()) {
      throw InvalidInputError("catalog entry '" + id + "' needs a string 'path'");
    }
    CatalogEntry e;
    e.song_id = id;
    e.path = item["path"].get<std::string>();
    if (e.path.is_relative() && !base_dir.empty()) e.path = base_dir / e.path;
    e.genre = item.value("genre", std::string{});
    if (item.contains("tempo_bpm") && !item["tempo_bpm"].is_null()) {
      if (!item["tempo_bpm"].is_number()) {
        throw InvalidInputError("catalog entry '" + id + "': tempo_bpm must be a number");
      }
      e.tempo_bpm = item["tempo_bpm"].get<double>();
    }
    catalog.add(std::move(e));
  }
  return catalog;
}

Catalog Catalog::load(const std::filesystem::path& manifest) {
  std::ifstream in(manifest, std::ios::binary);
  if (!in) throw InvalidInputError("cannot open catalog " + manifest.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), manifest.parent_path());
}

void Catalog::add(CatalogEntry entry) {
  if (entry.song_id.empty()) throw InvalidInputError("catalog entry has an empty song_id");
  std::string id = entry.song_id;
  entries_.insert_or_assign(std::move(id), std::move(entry));
}

const CatalogEntry* Catalog::find(const std::string& song_id) const {
  auto it = entries_.find(song_id);
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<std::string> Catalog::song_ids() const {
  std::vector<std::string> ids;
  ids.reserve(entries_.size());
  for (const auto& [id, entry] : entries_) ids.push_back(id);
  return ids;
}

}  // namespace msr
