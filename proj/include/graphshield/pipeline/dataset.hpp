#pragma once

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "graphshield/error.hpp"
#include "graphshield/graph/bucketing.hpp"
#include "graphshield/graph/edge_csv.hpp"
#include "graphshield/graph/synthetic.hpp"
#include "graphshield/pipeline/config.hpp"

namespace graphshield::pipeline {

inline constexpr const char* kDataDirEnv = "GRAPHSHIELD_DATA_DIR";

/// Step length that reproduces the weekly Bitcoin step counts from the span start.
inline constexpr std::int64_t kBitcoinWindowSeconds = 1200000;

struct Dataset {
  graph::DynamicGraph graph;  // raw features
  graph::BucketSpec bucket;
  std::string source;         // resolved path or "synthetic"
  bool bitcoin = false;
  std::size_t records = 0;
};

inline bool is_synthetic(const RunConfig& c) { return c.dataset == "synthetic"; }

inline bool names_bitcoin(const std::string& s) {
  std::string lower = s;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return lower.find("bitcoin") != std::string::npos;
}

namespace detail {

inline std::vector<std::string> shorthand_files(const std::string& name) {
  if (name == "bitcoin-alpha") return {"soc-sign-bitcoinalpha.csv", "soc-sign-bitcoinalpha.csv.gz"};
  if (name == "bitcoin-otc") return {"soc-sign-bitcoinotc.csv", "soc-sign-bitcoinotc.csv.gz"};
  return {name};
}

}  // namespace detail

/// Resolve `dataset` to a readable file. Relative paths and the shorthands
/// bitcoin-alpha / bitcoin-otc are looked up under $GRAPHSHIELD_DATA_DIR first,
/// then relative to the working directory.
inline std::filesystem::path resolve_dataset_path(const std::string& dataset) {
  namespace fs = std::filesystem;
  std::vector<fs::path> roots;
  if (const char* env = std::getenv(kDataDirEnv); env && *env) roots.emplace_back(env);
  roots.emplace_back(".");
  std::vector<std::string> tried;
  for (const auto& file : detail::shorthand_files(dataset)) {
    const fs::path p(file);
    if (p.is_absolute()) {
      if (fs::is_regular_file(p)) return p;
      tried.push_back(p.string());
      continue;
    }
    for (const auto& root : roots) {
      const fs::path candidate = root / p;
      if (fs::is_regular_file(candidate)) return candidate;
      tried.push_back(candidate.string());
    }
  }
  std::string list;
  for (const auto& t : tried) list += (list.empty() ? "" : ", ") + t;
  throw DataError("dataset not found (tried " + list + ")");
}

inline graph::TrustNetworkSpec synthetic_spec(const RunConfig& c) {
  graph::TrustNetworkSpec s;
  s.nodes = c.synthetic.nodes;
  s.steps = c.synthetic.steps;
  s.edges_per_step = c.synthetic.edges_per_step;
  s.low_reputation_fraction = c.synthetic.low_reputation_fraction;
  s.node_types = c.synthetic.node_types;
  s.edge_types = c.synthetic.edge_types;
  s.seed = c.synthetic.seed;
  return s;
}

inline graph::BucketSpec resolved_bucket(const RunConfig& c, bool bitcoin) {
  if (c.frequency != "auto") return graph::parse_bucket_spec(c.frequency);
  if (is_synthetic(c)) return {graph::Frequency::Fixed, synthetic_spec(c).step_seconds};
  if (bitcoin) return {graph::Frequency::Fixed, kBitcoinWindowSeconds};
  return {graph::Frequency::Weekly, 0};
}

inline std::size_t resolved_epochs(const RunConfig& c) {
  if (c.epochs) return *c.epochs;
  return names_bitcoin(c.dataset) ? 200 : 300;
}

/// Explicit train_steps, else floor(0.7 T) clamped to [1, T-1].
inline std::size_t resolved_train_steps(const RunConfig& c, std::size_t snapshots) {
  if (snapshots < 2) throw DataError("need at least 2 snapshots to split train/test, got " + std::to_string(snapshots));
  if (c.train_steps) {
    if (c.train_steps >= snapshots)
      throw ConfigError("train_steps", "must be below the snapshot count " + std::to_string(snapshots));
    return c.train_steps;
  }
  const auto s = static_cast<std::size_t>(0.7 * static_cast<double>(snapshots));
  return std::clamp<std::size_t>(s, 1, snapshots - 1);
}

inline Dataset load_dataset(const RunConfig& c) {
  Dataset d;
  if (is_synthetic(c)) {
    const auto spec = synthetic_spec(c);
    const auto edges = graph::generate_trust_network(spec);
    d.bucket = resolved_bucket(c, false);
    d.source = "synthetic";
    d.records = edges.size();
    const graph::TimeSpan span{spec.start_time, spec.start_time + static_cast<std::int64_t>(spec.steps) * spec.step_seconds};
    d.graph = graph::bucket_snapshots(edges, d.bucket, span);
    return d;
  }
  const auto path = resolve_dataset_path(c.dataset);
  d.bitcoin = names_bitcoin(c.dataset) || names_bitcoin(path.filename().string());
  d.bucket = resolved_bucket(c, d.bitcoin);
  d.source = path.string();
  const auto edges = graph::parse_edge_csv(path, c.schema);
  if (edges.empty()) throw DataError("dataset '" + d.source + "' has no edges");
  d.records = edges.size();
  d.graph = graph::bucket_snapshots(edges, d.bucket);
  return d;
}

}  // namespace graphshield::pipeline
