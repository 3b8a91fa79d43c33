#include "msr/records.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "msr/errors.hpp"

namespace msr {
namespace {

std::vector<std::string> split_csv_line(std::string_view line, std::size_t line_no) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          fields.back() += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  if (quoted) throw InvalidInputError("line " + std::to_string(line_no) + ": unterminated quote");
  return fields;
}

double parse_number(const std::string& field, const char* name, std::size_t line_no) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw InvalidInputError("line " + std::to_string(line_no) + ": " + name + " is not a number: '" +
                            field + "'");
  }
  return value;
}

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::vector<SongRecord> parse_annotations_csv(std::string_view text) {
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
  std::vector<SongRecord> records;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != kAnnotationHeader) {
        throw InvalidInputError("annotation header must be '" + std::string(kAnnotationHeader) + "'");
      }
      header_seen = true;
      continue;
    }
    const auto f = split_csv_line(line, line_no);
    if (f.size() != 5) {
      throw InvalidInputError("line " + std::to_string(line_no) + ": expected 5 fields, got " +
                              std::to_string(f.size()));
    }
    SongRecord r;
    r.song_id = f[0];
    r.genre = f[1];
    if (!f[2].empty()) r.tempo_bpm = parse_number(f[2], "tempo_bpm", line_no);
    r.alpha_min = parse_number(f[3], "alpha_min", line_no);
    r.alpha_max = parse_number(f[4], "alpha_max", line_no);
    try {
      r.validate();
    } catch (const ValidationError& e) {
      throw ValidationError(e.rule(), "line " + std::to_string(line_no) + ": " + e.what());
    }
    records.push_back(std::move(r));
  }
  if (!header_seen) throw InvalidInputError("annotation CSV is empty");
  return records;
}

std::vector<SongRecord> read_annotations_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInputError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_annotations_csv(ss.str());
}

std::string format_annotations_csv(std::span<const SongRecord> records) {
  std::string out(kAnnotationHeader);
  out += '\n';
  for (const auto& r : records) {
    if ((r.song_id + r.genre).find_first_of("\r\n") != std::string::npos) {
      throw InvalidInputError("record '" + r.song_id + "' contains a line break");
    }
    out += quote_if_needed(r.song_id) + ',' + quote_if_needed(r.genre) + ',';
    if (r.tempo_bpm) out += format_number(*r.tempo_bpm);
    out += ',' + format_number(r.alpha_min) + ',' + format_number(r.alpha_max) + '\n';
  }
  return out;
}

void write_annotations_csv(const std::filesystem::path& path, std::span<const SongRecord> records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInputError("cannot write " + path.string());
  out << format_annotations_csv(records);
}

}  // namespace msr
