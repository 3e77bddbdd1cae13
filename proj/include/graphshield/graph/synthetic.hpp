#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "graphshield/error.hpp"
#include "graphshield/graph/types.hpp"
#include "graphshield/numeric/rng.hpp"

namespace graphshield::graph {

/// Parameters of a signed trust network with planted low-reputation users.
struct TrustNetworkSpec {
  std::size_t nodes = 500;
  std::size_t steps = 40;
  std::size_t edges_per_step = 150;
  double low_reputation_fraction = 0.1;
  std::int32_t node_types = 1;
  std::int32_t edge_types = 1;
  std::int64_t start_time = 1289174400;  // 2010-11-08 00:00 UTC
  std::int64_t step_seconds = 7 * 86400;
  std::uint64_t seed = 1;
};

/// Generate a rating edge list. Each user has a latent reputation that drifts
/// slowly; ratings received track the target's reputation plus noise and are
/// clamped to [-10, 10]. Low-reputation users attract negative ratings.
inline std::vector<EdgeRecord> generate_trust_network(const TrustNetworkSpec& spec) {
  if (spec.nodes < 2 || spec.steps == 0) throw ConfigError("synthetic", "need at least 2 nodes and 1 step");
  Rng rng(spec.seed);
  const std::size_t n = spec.nodes;
  std::vector<double> reputation(n), activity(n);
  std::vector<TypeId> type(n);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(order);
  const auto low = static_cast<std::size_t>(std::lround(spec.low_reputation_fraction * static_cast<double>(n)));
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = order[k];
    reputation[i] = k < low ? -1.5 + 0.5 * rng.normal() : 1.0 + 0.6 * rng.normal();
    activity[i] = std::exp(0.8 * rng.normal());
    type[i] = static_cast<TypeId>(rng.uniform_int(static_cast<std::uint64_t>(std::max(1, spec.node_types))));
  }
  std::vector<double> cumulative(n);
  auto draw = [&](const std::vector<double>& cdf) {
    const double u = rng.uniform() * cdf.back();
    return static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
  };

  std::vector<EdgeRecord> edges;
  for (std::size_t t = 0; t < spec.steps; ++t) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) cumulative[i] = (acc += activity[i]);
    for (std::size_t k = 0; k < spec.edges_per_step; ++k) {
      const std::size_t src = draw(cumulative);
      std::size_t dst = draw(cumulative);
      if (dst == src) dst = (dst + 1 + rng.uniform_int(n - 1)) % n;
      const double raw = 2.0 + 3.0 * reputation[dst] + 1.5 * rng.normal();
      const double rating = std::clamp(std::round(raw), -10.0, 10.0);
      EdgeRecord e;
      e.src = static_cast<NodeId>(src + 1);
      e.dst = static_cast<NodeId>(dst + 1);
      e.weight = rating == 0.0 ? 1.0 : rating;
      e.timestamp = spec.start_time + static_cast<std::int64_t>(t) * spec.step_seconds +
                    static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(spec.step_seconds)));
      e.src_type = type[src];
      e.dst_type = type[dst];
      e.edge_type = static_cast<TypeId>(rng.uniform_int(static_cast<std::uint64_t>(std::max(1, spec.edge_types))));
      edges.push_back(e);
    }
    for (std::size_t i = 0; i < n; ++i) reputation[i] += 0.05 * rng.normal();
  }
  std::stable_sort(edges.begin(), edges.end(), [](const EdgeRecord& a, const EdgeRecord& b) { return a.timestamp < b.timestamp; });
  return edges;
}

/// Write edges as SOURCE,TARGET,RATING,TIME[,SRC_TYPE,DST_TYPE,EDGE_TYPE].
inline void write_edge_csv(const std::string& path, const std::vector<EdgeRecord>& edges, bool with_types = false) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write " + path);
  for (const auto& e : edges) {
    f << e.src << ',' << e.dst << ',' << e.weight << ',' << e.timestamp;
    if (with_types) f << ',' << e.src_type << ',' << e.dst_type << ',' << e.edge_type;
    f << '\n';
  }
}

}  // namespace graphshield::graph
