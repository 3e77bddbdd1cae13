#pragma once

// Graph reconstruction penalty. The predicted adjacency between rows a and b
// is sigmoid(z_a . z_b); each block contributes the squared Frobenius distance
// to its observed adjacency over all ordered pairs, diagonal included.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "graphshield/encoder/config.hpp"
#include "graphshield/encoder/layout.hpp"
#include "graphshield/graph/types.hpp"
#include "graphshield/numeric/ops.hpp"
#include "graphshield/numeric/rng.hpp"
#include "graphshield/numeric/tape.hpp"

namespace graphshield::encoder {

using LocalPair = std::pair<std::uint32_t, std::uint32_t>;

struct ReconstructionBlock {
  std::vector<std::size_t> rows;     // layout rows, local index = position
  std::vector<LocalPair> positives;  // sorted, unique
  bool exact = true;
  std::vector<LocalPair> negatives;  // sampled zero cells when !exact
  double negative_weight = 1.0;
};

struct ReconstructionPlan {
  std::vector<ReconstructionBlock> blocks;
};

/// Spatial blocks (one per snapshot) followed by temporal blocks (one per node
/// chain). Sampled blocks draw |positives| zero cells uniformly with
/// replacement and weight them to the full count of zero cells.
inline ReconstructionPlan plan_reconstruction(const graph::DynamicGraph& g, const RowLayout& lay,
                                              const EncoderConfig& cfg, Rng& rng) {
  ReconstructionPlan plan;
  for (std::size_t k = 0; k < lay.snapshots(); ++k) {
    const auto& s = g.snapshots()[k];
    ReconstructionBlock b;
    for (std::size_t r = lay.snapshot_offset[k]; r < lay.snapshot_offset[k + 1]; ++r) b.rows.push_back(r);
    for (const auto& [type, adj] : s.out_adj) {
      (void)type;
      for (std::size_t u = 0; u < adj.size(); ++u)
        for (std::size_t v : adj[u]) b.positives.emplace_back(static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(v));
    }
    std::sort(b.positives.begin(), b.positives.end());
    b.positives.erase(std::unique(b.positives.begin(), b.positives.end()), b.positives.end());
    const std::size_t n = b.rows.size();
    b.exact = cfg.reconstruction == ReconstructionMode::Exact || n <= cfg.exact_reconstruction_limit;
    if (!b.exact) {
      const std::size_t zeros = n * n - b.positives.size();
      const std::size_t draws = std::min(zeros, std::max<std::size_t>(b.positives.size(), 1));
      while (b.negatives.size() < draws) {
        const auto u = static_cast<std::uint32_t>(rng.uniform_int(n));
        const auto v = static_cast<std::uint32_t>(rng.uniform_int(n));
        if (std::binary_search(b.positives.begin(), b.positives.end(), LocalPair{u, v})) continue;
        b.negatives.emplace_back(u, v);
      }
      b.negative_weight = draws ? static_cast<double>(zeros) / static_cast<double>(draws) : 0.0;
    }
    plan.blocks.push_back(std::move(b));
  }
  for (std::size_t c = 0; c < lay.chains.lists(); ++c) {
    ReconstructionBlock b;
    const auto rows = lay.chains.list(c);
    b.rows.assign(rows.begin(), rows.end());
    for (std::size_t i = 0; i + 1 < b.rows.size(); ++i)
      b.positives.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i + 1));
    plan.blocks.push_back(std::move(b));
  }
  return plan;
}

namespace detail {

inline double row_dot(const Mat& z, std::size_t a, std::size_t b) {
  const double* za = z.row(a).data();
  const double* zb = z.row(b).data();
  double s = 0.0;
  for (std::size_t c = 0; c < z.cols(); ++c) s += za[c] * zb[c];
  return s;
}

// Visit every weighted cell of a block: f(local_a, local_b, target, weight).
template <class F>
void visit_cells(const ReconstructionBlock& b, F&& f) {
  const std::size_t n = b.rows.size();
  if (b.exact) {
    std::vector<char> adj(n * n, 0);
    for (auto [u, v] : b.positives) adj[u * n + v] = 1;
    for (std::size_t u = 0; u < n; ++u)
      for (std::size_t v = 0; v < n; ++v) f(u, v, adj[u * n + v] ? 1.0 : 0.0, 1.0);
  } else {
    for (auto [u, v] : b.positives) f(u, v, 1.0, 1.0);
    for (auto [u, v] : b.negatives) f(u, v, 0.0, b.negative_weight);
  }
}

}  // namespace detail

inline double reconstruction_loss(const Mat& z, const ReconstructionPlan& plan) {
  double total = 0.0;
  for (const auto& b : plan.blocks)
    detail::visit_cells(b, [&](std::size_t u, std::size_t v, double target, double w) {
      const double p = ops::sigmoid_value(detail::row_dot(z, b.rows[u], b.rows[v]));
      total += w * (p - target) * (p - target);
    });
  return total;
}

/// `plan` must outlive the tape's backward pass.
inline Var reconstruction_loss(Var z, const ReconstructionPlan& plan) {
  Tape& t = *z.tape;
  const double v = reconstruction_loss(z.value(), plan);
  return t.record("reconstruction_loss", Mat::scalar(v), t.requires_grad(z), [z, &plan](Tape& tp, const Mat& g) {
    const Mat& zv = tp.value(z);
    Mat dz(zv.rows(), zv.cols());
    const double scale = g[0];
    for (const auto& b : plan.blocks)
      detail::visit_cells(b, [&](std::size_t u, std::size_t v, double target, double w) {
        const std::size_t ra = b.rows[u], rb = b.rows[v];
        const double p = ops::sigmoid_value(detail::row_dot(zv, ra, rb));
        const double ds = scale * w * 2.0 * (p - target) * p * (1.0 - p);
        double* da = dz.row(ra).data();
        double* db = dz.row(rb).data();
        const double* za = zv.row(ra).data();
        const double* zb = zv.row(rb).data();
        for (std::size_t c = 0; c < zv.cols(); ++c) {
          da[c] += ds * zb[c];
          db[c] += ds * za[c];
        }
      });
    tp.accumulate(z, dz);
  });
}

}  // namespace graphshield::encoder
