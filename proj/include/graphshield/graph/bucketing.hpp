#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "graphshield/error.hpp"
#include "graphshield/graph/types.hpp"

namespace graphshield::graph {

enum class Frequency { Weekly, Monthly, Quarterly, Fixed };

struct BucketSpec {
  Frequency freq = Frequency::Weekly;
  /// Window length for Frequency::Fixed, in seconds. Windows start at the span
  /// start and only complete windows are kept.
  std::int64_t fixed_seconds = 0;
};

/// Inclusive time range in epoch seconds.
struct TimeSpan {
  std::int64_t begin = 0;
  std::int64_t end = 0;
};

inline std::string to_string(Frequency f) {
  switch (f) {
    case Frequency::Weekly: return "weekly";
    case Frequency::Monthly: return "monthly";
    case Frequency::Quarterly: return "quarterly";
    case Frequency::Fixed: return "fixed";
  }
  return "?";
}

/// Accepts "weekly", "monthly", "quarterly" or "fixed:<seconds>".
inline BucketSpec parse_bucket_spec(const std::string& text) {
  if (text == "weekly") return {Frequency::Weekly, 0};
  if (text == "monthly") return {Frequency::Monthly, 0};
  if (text == "quarterly") return {Frequency::Quarterly, 0};
  if (text.rfind("fixed:", 0) == 0) {
    try {
      const long long w = std::stoll(text.substr(6));
      if (w <= 0) throw ConfigError("freq", "fixed window must be positive");
      return {Frequency::Fixed, w};
    } catch (const std::logic_error&) {
      throw ConfigError("freq", "bad fixed window '" + text + "'");
    }
  }
  throw ConfigError("freq", "unknown frequency '" + text + "'");
}

inline std::string to_string(const BucketSpec& b) {
  return b.freq == Frequency::Fixed ? "fixed:" + std::to_string(b.fixed_seconds) : to_string(b.freq);
}

namespace detail {

using namespace std::chrono;

inline sys_days day_of(std::int64_t ts) {
  return sys_days{days{static_cast<int>(ts >= 0 ? ts / 86400 : -((-ts + 86399) / 86400))}};
}

inline std::int64_t seconds_of(sys_days d) { return static_cast<std::int64_t>(d.time_since_epoch().count()) * 86400; }

/// Start of the calendar bucket containing `ts` (UTC).
inline std::int64_t bucket_floor(std::int64_t ts, Frequency f) {
  const sys_days d = day_of(ts);
  switch (f) {
    case Frequency::Weekly: {
      const unsigned iso = weekday{d}.iso_encoding();  // Monday = 1
      return seconds_of(d - days{iso - 1});
    }
    case Frequency::Monthly: {
      const year_month_day ymd{d};
      return seconds_of(sys_days{ymd.year() / ymd.month() / 1});
    }
    case Frequency::Quarterly: {
      const year_month_day ymd{d};
      const unsigned m = static_cast<unsigned>(ymd.month());
      return seconds_of(sys_days{ymd.year() / month{(m - 1) / 3 * 3 + 1} / 1});
    }
    case Frequency::Fixed: break;
  }
  throw ConfigError("freq", "calendar floor requested for fixed windows");
}

inline std::int64_t bucket_next(std::int64_t start, Frequency f) {
  const year_month_day ymd{day_of(start)};
  switch (f) {
    case Frequency::Weekly: return start + 7 * 86400;
    case Frequency::Monthly: return seconds_of(sys_days{ymd + months{1}});
    case Frequency::Quarterly: return seconds_of(sys_days{ymd + months{3}});
    case Frequency::Fixed: break;
  }
  throw ConfigError("freq", "calendar step requested for fixed windows");
}

}  // namespace detail

/// Bucket boundaries covering `span`: boundaries[k] is the start of bucket k,
/// and the last element is the exclusive end of the final bucket.
inline std::vector<std::int64_t> bucket_boundaries(const BucketSpec& spec, const TimeSpan& span) {
  if (span.end < span.begin) throw DataError("empty time span");
  std::vector<std::int64_t> b;
  if (spec.freq == Frequency::Fixed) {
    // complete windows only; a trailing partial window is dropped
    if (spec.fixed_seconds <= 0) throw ConfigError("freq", "fixed window must be positive");
    const std::int64_t windows = (span.end - span.begin) / spec.fixed_seconds;
    if (windows == 0) throw DataError("span shorter than one fixed window: no snapshots");
    for (std::int64_t k = 0; k <= windows; ++k) b.push_back(span.begin + k * spec.fixed_seconds);
  } else {
    std::int64_t s = detail::bucket_floor(span.begin, spec.freq);
    while (s <= span.end) {
      b.push_back(s);
      s = detail::bucket_next(s, spec.freq);
    }
    b.push_back(s);
  }
  if (b.size() < 2) throw DataError("bucketing produced no snapshots");
  return b;
}

inline TimeSpan span_of(const std::vector<EdgeRecord>& edges) {
  if (edges.empty()) throw DataError("no edges");
  TimeSpan s{std::numeric_limits<std::int64_t>::max(), std::numeric_limits<std::int64_t>::min()};
  for (const auto& e : edges) {
    s.begin = std::min(s.begin, e.timestamp);
    s.end = std::max(s.end, e.timestamp);
  }
  return s;
}

namespace detail {

inline void fill_raw_features(Snapshot& s, std::map<NodeId, double>& activity) {
  const std::size_t n = s.active.size();
  s.features = Mat(n, kFeatureDim);
  std::vector<double> in_sum(n, 0.0), out_sum(n, 0.0), in_min(n, std::numeric_limits<double>::infinity());
  for (const auto& e : s.edges) {
    const std::size_t u = *s.local_index(e.src);
    const std::size_t v = *s.local_index(e.dst);
    s.features(v, 0) += 1.0;
    s.features(u, 1) += 1.0;
    in_sum[v] += e.weight;
    out_sum[u] += e.weight;
    in_min[v] = std::min(in_min[v], e.weight);
    if (e.weight < 0.0) s.features(v, 5) += 1.0;
    activity[e.src] += 1.0;
    activity[e.dst] += 1.0;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double in_deg = s.features(i, 0);
    const double out_deg = s.features(i, 1);
    s.features(i, 2) = in_deg > 0 ? in_sum[i] / in_deg : 0.0;
    s.features(i, 3) = out_deg > 0 ? out_sum[i] / out_deg : 0.0;
    s.features(i, 4) = in_deg > 0 ? in_min[i] : 0.0;
    s.features(i, 6) = std::log1p(activity[s.active[i]]);
    s.features(i, 7) = 1.0;
  }
}

}  // namespace detail

/// Group edges into time buckets. Edges outside `span` are dropped. Raw
/// (unstandardized) features are attached to every snapshot.
inline DynamicGraph bucket_snapshots(const std::vector<EdgeRecord>& edges, const BucketSpec& spec, const TimeSpan& span) {
  if (edges.empty()) throw DataError("bucket_snapshots: no edges");
  const auto bounds = bucket_boundaries(spec, span);
  const std::size_t T = bounds.size() - 1;

  std::map<NodeId, TypeId> registry;
  auto register_node = [&](NodeId id, TypeId type) {
    auto [it, inserted] = registry.emplace(id, type);
    if (!inserted && it->second != type)
      throw DataError("node " + std::to_string(id) + " declared with types " + std::to_string(it->second) + " and " +
                      std::to_string(type));
  };

  std::vector<Snapshot> snaps(T);
  for (std::size_t k = 0; k < T; ++k) {
    snaps[k].index = k + 1;
    snaps[k].start = bounds[k];
    snaps[k].end = bounds[k + 1];
  }
  for (const auto& e : edges) {
    if (e.timestamp < span.begin || e.timestamp > span.end || e.timestamp >= bounds.back()) continue;
    const auto it = std::upper_bound(bounds.begin(), bounds.end(), e.timestamp);
    const std::size_t k = static_cast<std::size_t>(it - bounds.begin()) - 1;
    snaps[k].edges.push_back(e);
    register_node(e.src, e.src_type);
    register_node(e.dst, e.dst_type);
  }

  std::map<NodeId, double> activity;
  for (auto& s : snaps) {
    std::stable_sort(s.edges.begin(), s.edges.end(), [](const EdgeRecord& a, const EdgeRecord& b) {
      return std::tie(a.src, a.dst, a.edge_type, a.timestamp) < std::tie(b.src, b.dst, b.edge_type, b.timestamp);
    });
    for (const auto& e : s.edges) {
      s.active.push_back(e.src);
      s.active.push_back(e.dst);
    }
    std::sort(s.active.begin(), s.active.end());
    s.active.erase(std::unique(s.active.begin(), s.active.end()), s.active.end());
    for (const auto& e : s.edges) {
      auto& out = s.out_adj[e.edge_type];
      auto& in = s.in_adj[e.edge_type];
      out.resize(s.active.size());
      in.resize(s.active.size());
      const std::size_t u = *s.local_index(e.src);
      const std::size_t v = *s.local_index(e.dst);
      out[u].push_back(v);
      in[v].push_back(u);
    }
    for (auto* side : {&s.out_adj, &s.in_adj})
      for (auto& [type, adj] : *side) {
        (void)type;
        adj.resize(s.active.size());
        for (auto& l : adj) {
          std::sort(l.begin(), l.end());
          l.erase(std::unique(l.begin(), l.end()), l.end());
        }
      }
    detail::fill_raw_features(s, activity);
  }
  return DynamicGraph(std::move(snaps), std::move(registry));
}

inline DynamicGraph bucket_snapshots(const std::vector<EdgeRecord>& edges, const BucketSpec& spec) {
  return bucket_snapshots(edges, spec, span_of(edges));
}

/// Z-score feature columns 0..6 with statistics from the first `train_steps`
/// snapshots. The constant column is left alone.
inline DynamicGraph standardize_features(const DynamicGraph& g, std::size_t train_steps) {
  if (train_steps == 0 || train_steps > g.size()) throw ConfigError("train_steps", "out of range for standardization");
  std::vector<Snapshot> snaps(g.snapshots().begin(), g.snapshots().end());
  constexpr std::size_t cols = kFeatureDim - 1;
  double count = 0.0;
  std::vector<double> mean(cols, 0.0), m2(cols, 0.0);
  for (std::size_t k = 0; k < train_steps; ++k)
    for (std::size_t i = 0; i < snaps[k].features.rows(); ++i) {
      count += 1.0;
      for (std::size_t c = 0; c < cols; ++c) {
        const double x = snaps[k].features(i, c);
        const double delta = x - mean[c];
        mean[c] += delta / count;
        m2[c] += delta * (x - mean[c]);
      }
    }
  std::vector<double> sd(cols, 1.0);
  for (std::size_t c = 0; c < cols; ++c) {
    const double var = count > 1 ? m2[c] / count : 0.0;
    sd[c] = var > 1e-24 ? std::sqrt(var) : 1.0;
  }
  for (auto& s : snaps)
    for (std::size_t i = 0; i < s.features.rows(); ++i)
      for (std::size_t c = 0; c < cols; ++c) s.features(i, c) = (s.features(i, c) - mean[c]) / sd[c];
  return DynamicGraph(std::move(snaps), g.registry());
}

/// First `train_steps` snapshots and the remainder. Snapshot indices keep
/// their timeline positions; the registry is shared.
inline std::pair<DynamicGraph, DynamicGraph> train_test_split(const DynamicGraph& g, std::size_t train_steps) {
  if (train_steps == 0 || train_steps >= g.size())
    throw ConfigError("train_steps", "must be in [1, " + std::to_string(g.size() - 1) + "], got " + std::to_string(train_steps));
  const auto all = g.snapshots();
  std::vector<Snapshot> train(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(train_steps));
  std::vector<Snapshot> test(all.begin() + static_cast<std::ptrdiff_t>(train_steps), all.end());
  return {DynamicGraph(std::move(train), g.registry()), DynamicGraph(std::move(test), g.registry())};
}

/// Dense 0/1 adjacency of snapshot t over its active nodes (sorted by id):
/// entry (i, j) is 1 iff some edge i -> j of any type exists.
inline Mat adjacency_matrix(const DynamicGraph& g, std::size_t t) {
  const Snapshot& s = g.at(t);
  Mat a(s.active.size(), s.active.size());
  for (const auto& [type, adj] : s.out_adj) {
    (void)type;
    for (std::size_t u = 0; u < adj.size(); ++u)
      for (std::size_t v : adj[u]) a(u, v) = 1.0;
  }
  return a;
}

/// Adjacency of a temporal chain of `length` positions: ones on the superdiagonal.
inline Mat temporal_chain_adjacency(std::size_t length) {
  Mat a(length, length);
  for (std::size_t i = 0; i + 1 < length; ++i) a(i, i + 1) = 1.0;
  return a;
}

/// Rebuild a single-type snapshot from a dense adjacency over `ids`.
inline Snapshot snapshot_from_adjacency(const Mat& adjacency, const std::vector<NodeId>& ids, std::size_t index = 1) {
  if (adjacency.rows() != ids.size() || adjacency.cols() != ids.size())
    throw ShapeError("snapshot_from_adjacency: " + adjacency.shape_str() + " for " + std::to_string(ids.size()) + " ids");
  Snapshot s;
  s.index = index;
  s.active = ids;
  auto& out = s.out_adj[0];
  auto& in = s.in_adj[0];
  out.resize(ids.size());
  in.resize(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i)
    for (std::size_t j = 0; j < ids.size(); ++j)
      if (adjacency(i, j) != 0.0) {
        s.edges.push_back(EdgeRecord{ids[i], ids[j], 0, 1.0, 0, 0, 0});
        out[i].push_back(j);
        in[j].push_back(i);
      }
  s.features = Mat(ids.size(), kFeatureDim);
  return s;
}

}  // namespace graphshield::graph
