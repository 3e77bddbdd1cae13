#pragma once

// Snapshot manifest, a line-oriented text file:
//
//   # graphshield snapshot manifest
//   format 1
//   frequency <weekly|monthly|quarterly|fixed:SECONDS>
//   snapshots <T>
//   nodes <distinct nodes>
//   edges <retained edges>
//   bucket <index> <start> <end> <active nodes> <edges>     (T lines)
//
// Timestamps are epoch seconds; a bucket covers [start, end).

#include <fstream>
#include <sstream>
#include <string>

#include "graphshield/error.hpp"
#include "graphshield/graph/bucketing.hpp"
#include "graphshield/graph/types.hpp"

namespace graphshield::graph {

inline std::string format_manifest(const DynamicGraph& g, const BucketSpec& spec) {
  std::ostringstream out;
  out << "# graphshield snapshot manifest\n";
  out << "format 1\n";
  out << "frequency " << to_string(spec) << "\n";
  out << "snapshots " << g.size() << "\n";
  out << "nodes " << g.registry().size() << "\n";
  out << "edges " << g.total_edges() << "\n";
  for (const Snapshot& s : g.snapshots())
    out << "bucket " << s.index << ' ' << s.start << ' ' << s.end << ' ' << s.node_count() << ' ' << s.edge_count() << "\n";
  return out.str();
}

struct ManifestBucket {
  std::size_t index = 0;
  std::int64_t start = 0;
  std::int64_t end = 0;
  std::size_t nodes = 0;
  std::size_t edges = 0;
};

struct Manifest {
  std::string frequency;
  std::size_t snapshots = 0;
  std::size_t nodes = 0;
  std::size_t edges = 0;
  std::vector<ManifestBucket> buckets;
};

inline Manifest parse_manifest(const std::string& text) {
  Manifest m;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "format") {
      int v = 0;
      ls >> v;
      if (v != 1) throw DataError("manifest: unsupported format", lineno);
    } else if (key == "frequency") {
      ls >> m.frequency;
    } else if (key == "snapshots") {
      ls >> m.snapshots;
    } else if (key == "nodes") {
      ls >> m.nodes;
    } else if (key == "edges") {
      ls >> m.edges;
    } else if (key == "bucket") {
      ManifestBucket b;
      ls >> b.index >> b.start >> b.end >> b.nodes >> b.edges;
      m.buckets.push_back(b);
    } else {
      throw DataError("manifest: unknown key '" + key + "'", lineno);
    }
    if (ls.fail()) throw DataError("manifest: malformed line", lineno);
  }
  if (m.buckets.size() != m.snapshots) throw DataError("manifest: bucket count does not match header");
  return m;
}

inline void write_manifest(const std::string& path, const DynamicGraph& g, const BucketSpec& spec) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write manifest " + path);
  f << format_manifest(g, spec);
}

}  // namespace graphshield::graph
