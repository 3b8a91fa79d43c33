#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace msr {

struct CatalogEntry {
  std::string song_id;
  std::filesystem::path path;
  std::string genre;
  std::optional<double> tempo_bpm;
};

/// Song manifest: a JSON object mapping song_id to {path, genre, tempo_bpm?}.
/// Relative paths are resolved against the manifest's directory.
class Catalog {
 public:
  Catalog() = default;

  static Catalog parse(std::string_view json_text, const std::filesystem::path& base_dir = {});
  static Catalog load(const std::filesystem::path& manifest);

  void add(CatalogEntry entry);
  const CatalogEntry* find(const std::string& song_id) const;
  std::vector<std::string> song_ids() const;
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  std::map<std::string, CatalogEntry> entries_;
};

}  // namespace msr
