#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <zlib.h>

#include "recbase/data.hpp"

namespace recbase {

namespace {

// gzread is transparent for uncompressed files, so one path serves both.
std::string read_text_file(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(fmt::format("{}: file not found", path.string()));
  gzFile f = gzopen(path.c_str(), "rb");
  if (f == nullptr) throw Error(fmt::format("{}: cannot open", path.string()));
  std::string out;
  char buf[1 << 16];
  int n;
  while ((n = gzread(f, buf, sizeof buf)) > 0) out.append(buf, static_cast<std::size_t>(n));
  const bool failed = n < 0;
  gzclose(f);
  if (failed) throw Error(fmt::format("{}: read error", path.string()));
  return out;
}

std::vector<std::string_view> split_fields(std::string_view line, std::string_view delim) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + delim.size();
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  s = trim(s);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

template <typename LineFn>
void for_each_line(std::string_view text, LineFn&& fn) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    fn(line_no, text.substr(start, end - start));
    start = end + 1;
  }
}

std::string_view field_at(const std::vector<std::string_view>& fields, int col, const std::string& source,
                          std::size_t line_no, const char* what) {
  if (col < 0 || static_cast<std::size_t>(col) >= fields.size()) {
    throw ParseError(source, line_no, fmt::format("missing {} column {} (row has {} fields)", what, col, fields.size()));
  }
  return trim(fields[static_cast<std::size_t>(col)]);
}

}  // namespace

Dataset parse_interactions(std::string_view text, const ColumnSchema& schema, const std::string& source) {
  if (schema.delimiter.empty()) throw ConfigError("column schema: empty delimiter");
  Dataset ds;
  std::vector<Interaction> entries;
  std::size_t skipped_non_positive = 0;
  bool header_pending = schema.header;

  for_each_line(text, [&](std::size_t line_no, std::string_view raw_line) {
    const std::string_view line = trim(raw_line);
    if (line.empty()) return;
    if (header_pending) {
      header_pending = false;
      return;
    }
    const auto fields = split_fields(line, schema.delimiter);
    const auto user_raw = field_at(fields, schema.user, source, line_no, "user");
    const auto item_raw = field_at(fields, schema.item, source, line_no, "item");
    if (user_raw.empty() || item_raw.empty()) throw ParseError(source, line_no, "empty user or item id");
    Interaction e;
    if (schema.weight) {
      const auto w = field_at(fields, *schema.weight, source, line_no, "weight");
      if (!parse_number(w, e.weight)) {
        throw ParseError(source, line_no, fmt::format("weight '{}' is not a number", w));
      }
      if (!std::isfinite(e.weight)) throw ParseError(source, line_no, "weight is not finite");
    }
    if (schema.timestamp) {
      const auto t = field_at(fields, *schema.timestamp, source, line_no, "timestamp");
      std::int64_t ts = 0;
      if (!parse_number(t, ts)) {
        double tsd = 0;
        if (!parse_number(t, tsd)) throw ParseError(source, line_no, fmt::format("timestamp '{}' is not a number", t));
        ts = static_cast<std::int64_t>(tsd);
      }
      e.timestamp = ts;
    }
    if (!(e.weight > 0.0)) {
      ++skipped_non_positive;
      return;
    }
    e.user = ds.users.intern(std::string(user_raw));
    e.item = ds.items.intern(std::string(item_raw));
    entries.push_back(e);
  });

  if (entries.empty()) {
    throw ParseError(source, 0, skipped_non_positive ? "no interaction with positive weight" : "empty file");
  }
  if (skipped_non_positive > 0) {
    warn(fmt::format("{}: skipped {} rows with non-positive weight", source, skipped_non_positive));
  }
  ds.matrix = InteractionMatrix::from_interactions(ds.users.size(), ds.items.size(), std::move(entries),
                                                   DuplicatePolicy::keep_earliest);
  return ds;
}

Dataset load_interactions(const std::filesystem::path& path, const ColumnSchema& schema) {
  const std::string text = read_text_file(path);
  return parse_interactions(text, schema, path.string());
}

ContentMatrix load_content(const std::filesystem::path& path, const ColumnSchema& schema, const IdMap& entities,
                           IdMap* features) {
  const std::string text = read_text_file(path);
  IdMap local;
  IdMap& feats = features ? *features : local;
  std::vector<Triplet> triplets;
  std::size_t unknown = 0;
  bool header_pending = schema.header;
  const std::string source = path.string();
  for_each_line(text, [&](std::size_t line_no, std::string_view raw_line) {
    const std::string_view line = trim(raw_line);
    if (line.empty()) return;
    if (header_pending) {
      header_pending = false;
      return;
    }
    const auto fields = split_fields(line, schema.delimiter);
    const auto entity_raw = field_at(fields, schema.user, source, line_no, "entity");
    const auto feature_raw = field_at(fields, schema.item, source, line_no, "feature");
    double w = 1.0;
    if (schema.weight) {
      const auto ws = field_at(fields, *schema.weight, source, line_no, "weight");
      if (!parse_number(ws, w) || !std::isfinite(w)) {
        throw ParseError(source, line_no, fmt::format("feature weight '{}' is not a finite number", ws));
      }
    }
    const auto entity = entities.find(std::string(entity_raw));
    if (!entity) {
      ++unknown;
      return;
    }
    triplets.push_back({*entity, feats.intern(std::string(feature_raw)), w});
  });
  if (unknown > 0) warn(fmt::format("{}: {} rows reference unknown entities", source, unknown));
  ContentMatrix c;
  c.features = CsrMatrix::from_triplets(entities.size(), feats.size(), std::move(triplets));
  return c;
}

}  // namespace recbase
