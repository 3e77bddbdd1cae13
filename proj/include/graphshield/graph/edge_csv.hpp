#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <zlib.h>

#include "graphshield/error.hpp"
#include "graphshield/graph/types.hpp"

namespace graphshield::graph {

/// Zero-based column positions. Optional columns are disabled with -1.
struct CsvSchema {
  int source = 0;
  int target = 1;
  int rating = 2;
  int time = 3;
  int source_type = -1;
  int target_type = -1;
  int edge_type = -1;
  char delimiter = ',';
  bool skip_header = false;
  bool allow_self_loops = false;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = line.find(delim, pos);
    out.push_back(trim(line.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos)));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && !s.empty();
}

inline NodeId parse_id(std::string_view s, const char* what, std::size_t line) {
  NodeId v = 0;
  if (parse_number(s, v)) return v;
  double d = 0.0;
  if (parse_number(s, d) && std::isfinite(d) && d == std::floor(d)) return static_cast<NodeId>(d);
  throw DataError(std::string("non-numeric ") + what + " '" + std::string(s) + "'", line);
}

inline TypeId parse_type(std::string_view s, const char* what, std::size_t line) {
  TypeId v = 0;
  if (!parse_number(s, v) || v < 0) throw DataError(std::string("bad ") + what + " '" + std::string(s) + "'", line);
  return v;
}

}  // namespace detail

/// Parse one data row. `line` is only used in error messages.
inline EdgeRecord parse_edge_row(std::string_view text, const CsvSchema& schema, std::size_t line) {
  const auto fields = detail::split(text, schema.delimiter);
  auto field = [&](int col, const char* what) -> std::string_view {
    if (col < 0 || static_cast<std::size_t>(col) >= fields.size())
      throw DataError(std::string("missing ") + what + " column", line);
    return fields[static_cast<std::size_t>(col)];
  };
  EdgeRecord e;
  e.src = detail::parse_id(field(schema.source, "source"), "source", line);
  e.dst = detail::parse_id(field(schema.target, "target"), "target", line);
  if (!detail::parse_number(field(schema.rating, "rating"), e.weight) || !std::isfinite(e.weight))
    throw DataError("non-numeric rating '" + std::string(field(schema.rating, "rating")) + "'", line);
  double ts = 0.0;
  const auto ts_text = field(schema.time, "time");
  if (!detail::parse_number(ts_text, ts) || !std::isfinite(ts) || std::abs(ts) > 9.0e15)
    throw DataError("unparseable timestamp '" + std::string(ts_text) + "'", line);
  e.timestamp = static_cast<std::int64_t>(std::trunc(ts));
  if (schema.source_type >= 0) e.src_type = detail::parse_type(field(schema.source_type, "source type"), "source type", line);
  if (schema.target_type >= 0) e.dst_type = detail::parse_type(field(schema.target_type, "target type"), "target type", line);
  if (schema.edge_type >= 0) e.edge_type = detail::parse_type(field(schema.edge_type, "edge type"), "edge type", line);
  if (e.src == e.dst && !schema.allow_self_loops)
    throw DataError("self-loop on node " + std::to_string(e.src) + " (self-loops disabled)", line);
  return e;
}

/// Read an edge list. Plain and gzip-compressed files are both accepted.
inline std::vector<EdgeRecord> parse_edge_csv(const std::filesystem::path& path, const CsvSchema& schema = {}) {
  if (!std::filesystem::exists(path)) throw DataError("no such file: " + path.string());
  gzFile f = gzopen(path.string().c_str(), "rb");
  if (!f) throw DataError("cannot open " + path.string());
  std::vector<EdgeRecord> out;
  std::string line;
  char buf[4096];
  std::size_t lineno = 0;
  try {
    bool pending = false;
    while (true) {
      line.clear();
      bool got = false;
      while (gzgets(f, buf, sizeof buf)) {
        got = true;
        line += buf;
        if (!line.empty() && line.back() == '\n') break;
      }
      if (!got) break;
      ++lineno;
      const auto body = detail::trim(line);
      if (body.empty() || body.front() == '#') continue;
      if (schema.skip_header && !pending) {
        pending = true;
        continue;
      }
      pending = true;
      out.push_back(parse_edge_row(body, schema, lineno));
    }
  } catch (...) {
    gzclose(f);
    throw;
  }
  gzclose(f);
  return out;
}

}  // namespace graphshield::graph
