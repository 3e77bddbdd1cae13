#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <vector>

#include "graphshield/error.hpp"
#include "graphshield/graph/types.hpp"
#include "graphshield/numeric/rng.hpp"

namespace graphshield::graph {

enum class Label : std::uint8_t { Safe = 0, Risky = 1, Unlabeled = 2 };

/// Per-snapshot labels aligned with each snapshot's `active` order.
class LabelSet {
 public:
  LabelSet() = default;
  explicit LabelSet(std::map<std::size_t, std::vector<Label>> by_snapshot) : by_snapshot_(std::move(by_snapshot)) {}

  const std::vector<Label>& at(std::size_t t) const {
    auto it = by_snapshot_.find(t);
    if (it == by_snapshot_.end()) throw std::out_of_range("no labels for snapshot " + std::to_string(t));
    return it->second;
  }
  bool contains(std::size_t t) const { return by_snapshot_.count(t) != 0; }

  Label label(const DynamicGraph& g, NodeId id, std::size_t t) const {
    const auto local = g.at(t).local_index(id);
    if (!local) throw DataError("node " + std::to_string(id) + " not active at t=" + std::to_string(t));
    return at(t)[*local];
  }

  std::size_t count(std::size_t t, Label l) const {
    const auto& v = at(t);
    return static_cast<std::size_t>(std::count(v.begin(), v.end(), l));
  }

  const std::map<std::size_t, std::vector<Label>>& raw() const { return by_snapshot_; }

  bool operator==(const LabelSet&) const = default;

 private:
  std::map<std::size_t, std::vector<Label>> by_snapshot_;
};

inline std::size_t quota(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::lround(fraction * static_cast<double>(n)));
}

/// Synthetic ground truth plus masking. At each snapshot the `risk_ratio`
/// fraction of active nodes with the lowest cumulative mean incoming rating
/// (ties to the lower id; never-rated nodes rank last) is Risky. A uniformly
/// random `unlabeled_ratio` fraction of active nodes, drawn independently of
/// the labels, is then masked.
inline LabelSet derive_labels(const DynamicGraph& g, double risk_ratio, double unlabeled_ratio, std::uint64_t seed) {
  if (!(risk_ratio > 0.0 && risk_ratio < 1.0)) throw ConfigError("risk_ratio", "must lie in (0, 1)");
  if (!(unlabeled_ratio >= 0.0 && unlabeled_ratio < 1.0)) throw ConfigError("unlabeled_ratio", "must lie in [0, 1)");

  std::map<NodeId, std::pair<double, double>> cumulative;  // id -> (rating sum, count)
  std::map<std::size_t, std::vector<Label>> out;
  for (const Snapshot& s : g.snapshots()) {
    for (const auto& e : s.edges) {
      auto& c = cumulative[e.dst];
      c.first += e.weight;
      c.second += 1.0;
    }
    const std::size_t n = s.active.size();
    std::vector<double> score(n, std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < n; ++i) {
      auto it = cumulative.find(s.active[i]);
      if (it != cumulative.end() && it->second.second > 0) score[i] = it->second.first / it->second.second;
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    // active is sorted by id, so a stable sort breaks ties toward the lower id
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] < score[b]; });
    std::vector<Label> labels(n, Label::Safe);
    const std::size_t risky = quota(risk_ratio, n);
    for (std::size_t k = 0; k < risky; ++k) labels[order[k]] = Label::Risky;

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng = Rng::stream(seed, s.index);
    rng.shuffle(perm);
    const std::size_t masked = quota(unlabeled_ratio, n);
    for (std::size_t k = 0; k < masked; ++k) labels[perm[k]] = Label::Unlabeled;
    out.emplace(s.index, std::move(labels));
  }
  return LabelSet(std::move(out));
}

/// Keep only the snapshots present in `g`.
inline LabelSet restrict_labels(const LabelSet& labels, const DynamicGraph& g) {
  std::map<std::size_t, std::vector<Label>> out;
  for (const Snapshot& s : g.snapshots()) out.emplace(s.index, labels.at(s.index));
  return LabelSet(std::move(out));
}

}  // namespace graphshield::graph
