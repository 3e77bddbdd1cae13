#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "graphshield/error.hpp"
#include "graphshield/numeric/mat.hpp"

namespace graphshield::graph {

using NodeId = std::int64_t;
using TypeId = std::int32_t;

struct NodeRef {
  NodeId id = 0;
  TypeId node_type = 0;
};

struct EdgeRecord {
  NodeId src = 0;
  NodeId dst = 0;
  TypeId edge_type = 0;
  double weight = 0.0;
  std::int64_t timestamp = 0;
  TypeId src_type = 0;
  TypeId dst_type = 0;

  bool operator==(const EdgeRecord&) const = default;
};

/// Number of raw per-node input features.
inline constexpr std::size_t kFeatureDim = 8;

/// One time bucket of the dynamic graph. Node-local indices refer to
/// positions in `active`, which is sorted by id.
struct Snapshot {
  std::size_t index = 0;        // 1-based position in the full timeline
  std::int64_t start = 0;       // bucket bounds, [start, end)
  std::int64_t end = 0;
  std::vector<NodeId> active;   // sorted, unique
  std::vector<EdgeRecord> edges;
  /// out_adj[edge_type][local] = sorted local indices of out-neighbors.
  std::map<TypeId, std::vector<std::vector<std::size_t>>> out_adj;
  /// in_adj[edge_type][local] = sorted local indices of in-neighbors.
  std::map<TypeId, std::vector<std::vector<std::size_t>>> in_adj;
  Mat features;                 // |active| x kFeatureDim

  std::optional<std::size_t> local_index(NodeId id) const {
    auto it = std::lower_bound(active.begin(), active.end(), id);
    if (it == active.end() || *it != id) return std::nullopt;
    return static_cast<std::size_t>(it - active.begin());
  }

  std::size_t node_count() const { return active.size(); }
  std::size_t edge_count() const { return edges.size(); }

  /// Sorted local indices adjacent to `local` in either direction over all edge types.
  std::vector<std::size_t> undirected_neighbors(std::size_t local) const {
    std::vector<std::size_t> out;
    for (const auto* side : {&out_adj, &in_adj})
      for (const auto& [type, adj] : *side) {
        (void)type;
        out.insert(out.end(), adj[local].begin(), adj[local].end());
      }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
};

/// Ordered snapshots plus the node registry. Immutable once built.
class DynamicGraph {
 public:
  DynamicGraph() = default;
  DynamicGraph(std::vector<Snapshot> snapshots, std::map<NodeId, TypeId> registry)
      : snapshots_(std::move(snapshots)), registry_(std::move(registry)) {
    for (std::size_t k = 1; k < snapshots_.size(); ++k)
      if (snapshots_[k].index != snapshots_[k - 1].index + 1)
        throw DataError("DynamicGraph: snapshot indices must be contiguous");
    for (const auto& [id, type] : registry_) {
      (void)id;
      node_types_.insert(type);
    }
    for (const auto& s : snapshots_) {
      for (NodeId id : s.active)
        if (!registry_.count(id)) throw DataError("DynamicGraph: node " + std::to_string(id) + " missing from registry");
      for (const auto& e : s.edges) edge_types_.insert(e.edge_type);
    }
  }

  std::size_t size() const { return snapshots_.size(); }
  bool empty() const { return snapshots_.empty(); }
  std::span<const Snapshot> snapshots() const { return snapshots_; }

  std::size_t first_index() const { return snapshots_.empty() ? 0 : snapshots_.front().index; }
  std::size_t last_index() const { return snapshots_.empty() ? 0 : snapshots_.back().index; }

  /// Snapshot by its timeline index t.
  const Snapshot& at(std::size_t t) const {
    if (snapshots_.empty() || t < first_index() || t > last_index())
      throw std::out_of_range("snapshot index " + std::to_string(t) + " outside [" + std::to_string(first_index()) +
                              ", " + std::to_string(last_index()) + "]");
    return snapshots_[t - first_index()];
  }

  const std::map<NodeId, TypeId>& registry() const { return registry_; }
  TypeId node_type(NodeId id) const {
    auto it = registry_.find(id);
    if (it == registry_.end()) throw DataError("unknown node " + std::to_string(id));
    return it->second;
  }
  const std::set<TypeId>& node_types() const { return node_types_; }
  const std::set<TypeId>& edge_types() const { return edge_types_; }

  std::size_t total_edges() const {
    std::size_t n = 0;
    for (const auto& s : snapshots_) n += s.edges.size();
    return n;
  }

  /// Total number of (node, t) rows across all snapshots.
  std::size_t total_rows() const {
    std::size_t n = 0;
    for (const auto& s : snapshots_) n += s.active.size();
    return n;
  }

 private:
  std::vector<Snapshot> snapshots_;
  std::map<NodeId, TypeId> registry_;
  std::set<TypeId> node_types_;
  std::set<TypeId> edge_types_;
};

}  // namespace graphshield::graph
