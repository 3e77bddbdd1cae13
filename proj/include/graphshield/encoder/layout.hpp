#pragma once

// Flattened (node, t) row layout of a dynamic graph. Rows are ordered by
// snapshot, then by node id within a snapshot.

#include <algorithm>
#include <cstddef>
#include <map>
#include <vector>

#include "graphshield/encoder/attention.hpp"
#include "graphshield/error.hpp"
#include "graphshield/graph/types.hpp"

namespace graphshield::encoder {

struct RowLayout {
  std::vector<std::size_t> snapshot_offset{0};  // rows of snapshot k: [offset[k], offset[k+1])
  std::vector<std::size_t> snapshot_index;      // timeline index of snapshot k
  std::vector<graph::NodeId> node;
  std::vector<double> time;                     // timeline index per row
  std::vector<std::size_t> type_slot;           // dense node-type slot per row
  Neighborhoods spatial;                        // per row, self included
  Neighborhoods chains;                         // per node, rows in time order
  std::vector<graph::NodeId> chain_node;

  std::size_t rows() const { return node.size(); }
  std::size_t snapshots() const { return snapshot_index.size(); }
};

/// Sorted node types of `g`; slot k of a type-indexed parameter belongs to entry k.
inline std::vector<graph::TypeId> type_slots(const graph::DynamicGraph& g) {
  return {g.node_types().begin(), g.node_types().end()};
}

inline RowLayout build_layout(const graph::DynamicGraph& g, const std::vector<graph::TypeId>& slots) {
  RowLayout lay;
  std::map<graph::NodeId, std::vector<std::size_t>> chain;
  std::vector<std::size_t> nb;
  for (const auto& s : g.snapshots()) {
    const std::size_t base = lay.rows();
    lay.snapshot_index.push_back(s.index);
    for (std::size_t i = 0; i < s.active.size(); ++i) {
      const graph::NodeId id = s.active[i];
      auto it = std::lower_bound(slots.begin(), slots.end(), g.node_type(id));
      if (it == slots.end() || *it != g.node_type(id))
        throw DataError("node " + std::to_string(id) + " has type " + std::to_string(g.node_type(id)) +
                        " unknown to the encoder");
      lay.node.push_back(id);
      lay.time.push_back(static_cast<double>(s.index));
      lay.type_slot.push_back(static_cast<std::size_t>(it - slots.begin()));
      nb = s.undirected_neighbors(i);
      nb.insert(std::lower_bound(nb.begin(), nb.end(), i), i);
      nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
      for (auto& j : nb) j += base;
      lay.spatial.push(nb);
      chain[id].push_back(base + i);
    }
    lay.snapshot_offset.push_back(lay.rows());
  }
  for (const auto& [id, rows] : chain) {
    lay.chains.push(rows);
    lay.chain_node.push_back(id);
  }
  return lay;
}

inline RowLayout build_layout(const graph::DynamicGraph& g) { return build_layout(g, type_slots(g)); }

/// Stack snapshot feature matrices in layout order.
inline Mat stack_features(const graph::DynamicGraph& g) {
  std::size_t cols = 0;
  for (const auto& s : g.snapshots())
    if (!s.active.empty()) cols = s.features.cols();
  Mat out(g.total_rows(), cols);
  std::size_t r = 0;
  for (const auto& s : g.snapshots()) {
    if (s.features.rows() != s.active.size() || (s.features.cols() != cols && !s.active.empty()))
      throw ShapeError("stack_features: snapshot " + std::to_string(s.index) + " features " + s.features.shape_str());
    for (std::size_t i = 0; i < s.active.size(); ++i, ++r) std::copy_n(s.features.row(i).begin(), cols, out.row(r).begin());
  }
  return out;
}

}  // namespace graphshield::encoder
