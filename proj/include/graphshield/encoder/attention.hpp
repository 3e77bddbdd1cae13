#pragma once

// Separable-kernel multi-head attention.
//
// For a target row i with neighbor set N(i), head h works on columns
// [h*dh, (h+1)*dh) and computes
//
//   M_i = phi(Q_i) S / (phi(Q_i) . z),   S = sum_j phi(K_j)^T V_j,   z = sum_j phi(K_j)
//
// with phi(x) = ELU(x) + 1 > 0. Two neighborhood shapes are supported:
// per-row lists (spatial op, one S per target) and groups whose members all
// attend to the whole group (temporal op, one S per group, shared).

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "graphshield/error.hpp"
#include "graphshield/numeric/mat.hpp"
#include "graphshield/numeric/ops.hpp"
#include "graphshield/numeric/tape.hpp"

namespace graphshield::encoder {

/// CSR lists. For per-row neighborhoods, list r belongs to row r. For groups,
/// list g enumerates the member rows of group g.
struct Neighborhoods {
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> indices;

  std::size_t lists() const { return offsets.size() - 1; }
  std::span<const std::size_t> list(std::size_t r) const {
    return {indices.data() + offsets[r], offsets[r + 1] - offsets[r]};
  }
  void push(std::span<const std::size_t> members) {
    indices.insert(indices.end(), members.begin(), members.end());
    offsets.push_back(indices.size());
  }
};

/// Elementwise ELU(x) + 1.
inline Mat kernel_phi(const Mat& x) {
  Mat out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > 0.0 ? x[i] + 1.0 : std::exp(x[i]);
  return out;
}

inline double kernel_phi_slope(double x) { return ops::elu_slope(x); }

namespace detail {

struct HeadSums {
  std::vector<double> s;  // dh x dh, row-major
  std::vector<double> z;  // dh
};

inline void check_qkv(const Mat& q, const Mat& k, const Mat& v, std::size_t heads, const char* op) {
  if (!q.same_shape(k) || !q.same_shape(v))
    throw ShapeError(std::string(op) + ": Q/K/V shapes " + q.shape_str() + ", " + k.shape_str() + ", " + v.shape_str());
  if (heads == 0 || q.cols() % heads != 0)
    throw ShapeError(std::string(op) + ": " + std::to_string(heads) + " heads do not divide width " + std::to_string(q.cols()));
}

// phi(x) into a per-thread buffer that keeps its capacity between calls.
// Reallocating two N x d temporaries per call costs page faults once they
// cross the allocator's trim threshold, and that cost dominated large inputs.
inline const double* phi_scratch(const Mat& x, std::size_t slot) {
  thread_local std::vector<double> buffers[2];
  auto& b = buffers[slot];
  if (b.size() < x.size()) b.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) b[i] = x[i] > 0.0 ? x[i] + 1.0 : std::exp(x[i]);
  return b.data();
}

inline void accumulate_sums(const double* phik, std::size_t stride, const Mat& v,
                            std::span<const std::size_t> members, std::size_t c0, std::size_t dh, HeadSums& out) {
  out.s.assign(dh * dh, 0.0);
  out.z.assign(dh, 0.0);
  for (std::size_t j : members) {
    const double* kj = phik + j * stride + c0;
    const double* vj = v.row(j).data() + c0;
    for (std::size_t a = 0; a < dh; ++a) {
      out.z[a] += kj[a];
      double* srow = out.s.data() + a * dh;
      for (std::size_t b = 0; b < dh; ++b) srow[b] += kj[a] * vj[b];
    }
  }
}

inline void accumulate_sums(const Mat& phik, const Mat& v, std::span<const std::size_t> members, std::size_t c0,
                            std::size_t dh, HeadSums& out) {
  out.s.assign(dh * dh, 0.0);
  out.z.assign(dh, 0.0);
  for (std::size_t j : members) {
    const double* kj = phik.row(j).data() + c0;
    const double* vj = v.row(j).data() + c0;
    for (std::size_t a = 0; a < dh; ++a) {
      out.z[a] += kj[a];
      double* srow = out.s.data() + a * dh;
      for (std::size_t b = 0; b < dh; ++b) srow[b] += kj[a] * vj[b];
    }
  }
}

inline void message_row(const double* q, const HeadSums& sums, std::size_t dh, double* out, double& den) {
  den = 0.0;
  for (std::size_t a = 0; a < dh; ++a) den += q[a] * sums.z[a];
  for (std::size_t b = 0; b < dh; ++b) out[b] = 0.0;
  for (std::size_t a = 0; a < dh; ++a) {
    const double* srow = sums.s.data() + a * dh;
    for (std::size_t b = 0; b < dh; ++b) out[b] += q[a] * srow[b];
  }
  for (std::size_t b = 0; b < dh; ++b) out[b] /= den;
}

}  // namespace detail

/// Messages for every row with its own neighbor list. Rows with an empty list
/// are rejected (callers add a self-loop).
inline Mat neighbor_messages(const Mat& q, const Mat& k, const Mat& v, const Neighborhoods& nb, std::size_t heads) {
  detail::check_qkv(q, k, v, heads, "neighbor_messages");
  if (nb.lists() != q.rows()) throw ShapeError("neighbor_messages: one neighbor list per row required");
  const std::size_t dh = q.cols() / heads, w = q.cols();
  const double* phiq = detail::phi_scratch(q, 0);
  const double* phik = detail::phi_scratch(k, 1);
  Mat out(q.rows(), q.cols());
  detail::HeadSums sums;
  for (std::size_t i = 0; i < q.rows(); ++i) {
    const auto members = nb.list(i);
    if (members.empty()) throw NumericError("neighbor_messages: row " + std::to_string(i) + " has no neighbors");
    for (std::size_t h = 0; h < heads; ++h) {
      const std::size_t c0 = h * dh;
      detail::accumulate_sums(phik, w, v, members, c0, dh, sums);
      double den = 0.0;
      detail::message_row(phiq + i * w + c0, sums, dh, out.row(i).data() + c0, den);
    }
  }
  return out;
}

/// Messages where every member of a group attends to the whole group.
inline Mat group_messages(const Mat& q, const Mat& k, const Mat& v, const Neighborhoods& groups, std::size_t heads) {
  detail::check_qkv(q, k, v, heads, "group_messages");
  const std::size_t dh = q.cols() / heads, w = q.cols();
  const double* phiq = detail::phi_scratch(q, 0);
  const double* phik = detail::phi_scratch(k, 1);
  Mat out(q.rows(), q.cols());
  detail::HeadSums sums;
  for (std::size_t g = 0; g < groups.lists(); ++g) {
    const auto members = groups.list(g);
    for (std::size_t h = 0; h < heads; ++h) {
      const std::size_t c0 = h * dh;
      detail::accumulate_sums(phik, w, v, members, c0, dh, sums);
      for (std::size_t i : members) {
        double den = 0.0;
        detail::message_row(phiq + i * w + c0, sums, dh, out.row(i).data() + c0, den);
      }
    }
  }
  return out;
}

namespace detail {

// Backward of one target row for one head given cached sums. Accumulates into
// the phi-space gradients dphiq (row i) and dphik, and into dv.
inline void message_row_backward(const double* phiq_i, const HeadSums& sums, const double* m_i, const double* g_i,
                                 std::size_t dh, double* dphiq_i, std::vector<double>& dnum, double& dden) {
  double den = 0.0;
  for (std::size_t a = 0; a < dh; ++a) den += phiq_i[a] * sums.z[a];
  double gm = 0.0;
  for (std::size_t b = 0; b < dh; ++b) {
    dnum[b] = g_i[b] / den;
    gm += g_i[b] * m_i[b];
  }
  dden = -gm / den;
  for (std::size_t a = 0; a < dh; ++a) {
    const double* srow = sums.s.data() + a * dh;
    double acc = dden * sums.z[a];
    for (std::size_t b = 0; b < dh; ++b) acc += srow[b] * dnum[b];
    dphiq_i[a] += acc;
  }
}

}  // namespace detail

/// Tape op for neighbor_messages.
inline Var neighbor_attention(Var q, Var k, Var v, const Neighborhoods& nb, std::size_t heads) {
  Tape& t = *q.tape;
  Mat out = neighbor_messages(q.value(), k.value(), v.value(), nb, heads);
  const bool rg = t.requires_grad(q) || t.requires_grad(k) || t.requires_grad(v);
  Mat saved = out;
  return t.record("neighbor_attention", std::move(out), rg, [q, k, v, &nb, heads, saved](Tape& tp, const Mat& g) {
    const Mat& qv = tp.value(q);
    const Mat& kv = tp.value(k);
    const Mat& vv = tp.value(v);
    const std::size_t dh = qv.cols() / heads;
    const Mat phiq = kernel_phi(qv);
    const Mat phik = kernel_phi(kv);
    Mat dphiq(qv.rows(), qv.cols()), dphik(kv.rows(), kv.cols()), dv(vv.rows(), vv.cols());
    detail::HeadSums sums;
    std::vector<double> dnum(dh);
    for (std::size_t i = 0; i < qv.rows(); ++i) {
      const auto members = nb.list(i);
      for (std::size_t h = 0; h < heads; ++h) {
        const std::size_t c0 = h * dh;
        detail::accumulate_sums(phik, vv, members, c0, dh, sums);
        double dden = 0.0;
        const double* qi = phiq.row(i).data() + c0;
        detail::message_row_backward(qi, sums, saved.row(i).data() + c0, g.row(i).data() + c0, dh,
                                     dphiq.row(i).data() + c0, dnum, dden);
        for (std::size_t j : members) {
          const double* vj = vv.row(j).data() + c0;
          const double* kj = phik.row(j).data() + c0;
          double dv_dot = 0.0, kq = 0.0;
          for (std::size_t b = 0; b < dh; ++b) dv_dot += dnum[b] * vj[b];
          for (std::size_t a = 0; a < dh; ++a) kq += kj[a] * qi[a];
          double* dkj = dphik.row(j).data() + c0;
          double* dvj = dv.row(j).data() + c0;
          for (std::size_t a = 0; a < dh; ++a) dkj[a] += qi[a] * (dv_dot + dden);
          for (std::size_t b = 0; b < dh; ++b) dvj[b] += kq * dnum[b];
        }
      }
    }
    for (std::size_t i = 0; i < dphiq.size(); ++i) dphiq[i] *= kernel_phi_slope(qv[i]);
    for (std::size_t i = 0; i < dphik.size(); ++i) dphik[i] *= kernel_phi_slope(kv[i]);
    tp.accumulate(q, dphiq);
    tp.accumulate(k, dphik);
    tp.accumulate(v, dv);
  });
}

/// Tape op for group_messages.
inline Var group_attention(Var q, Var k, Var v, const Neighborhoods& groups, std::size_t heads) {
  Tape& t = *q.tape;
  Mat out = group_messages(q.value(), k.value(), v.value(), groups, heads);
  const bool rg = t.requires_grad(q) || t.requires_grad(k) || t.requires_grad(v);
  Mat saved = out;
  return t.record("group_attention", std::move(out), rg, [q, k, v, &groups, heads, saved](Tape& tp, const Mat& g) {
    const Mat& qv = tp.value(q);
    const Mat& kv = tp.value(k);
    const Mat& vv = tp.value(v);
    const std::size_t dh = qv.cols() / heads;
    const Mat phiq = kernel_phi(qv);
    const Mat phik = kernel_phi(kv);
    Mat dphiq(qv.rows(), qv.cols()), dphik(kv.rows(), kv.cols()), dv(vv.rows(), vv.cols());
    detail::HeadSums sums;
    std::vector<double> dnum(dh), ds(dh * dh), dz(dh);
    for (std::size_t gi = 0; gi < groups.lists(); ++gi) {
      const auto members = groups.list(gi);
      for (std::size_t h = 0; h < heads; ++h) {
        const std::size_t c0 = h * dh;
        detail::accumulate_sums(phik, vv, members, c0, dh, sums);
        std::fill(ds.begin(), ds.end(), 0.0);
        std::fill(dz.begin(), dz.end(), 0.0);
        for (std::size_t i : members) {
          double dden = 0.0;
          const double* qi = phiq.row(i).data() + c0;
          detail::message_row_backward(qi, sums, saved.row(i).data() + c0, g.row(i).data() + c0, dh,
                                       dphiq.row(i).data() + c0, dnum, dden);
          for (std::size_t a = 0; a < dh; ++a) {
            dz[a] += dden * qi[a];
            for (std::size_t b = 0; b < dh; ++b) ds[a * dh + b] += qi[a] * dnum[b];
          }
        }
        for (std::size_t j : members) {
          const double* vj = vv.row(j).data() + c0;
          const double* kj = phik.row(j).data() + c0;
          double* dkj = dphik.row(j).data() + c0;
          double* dvj = dv.row(j).data() + c0;
          for (std::size_t a = 0; a < dh; ++a) {
            double acc = dz[a];
            for (std::size_t b = 0; b < dh; ++b) {
              acc += ds[a * dh + b] * vj[b];
              dvj[b] += ds[a * dh + b] * kj[a];
            }
            dkj[a] += acc;
          }
        }
      }
    }
    for (std::size_t i = 0; i < dphiq.size(); ++i) dphiq[i] *= kernel_phi_slope(qv[i]);
    for (std::size_t i = 0; i < dphik.size(); ++i) dphik[i] *= kernel_phi_slope(kv[i]);
    tp.accumulate(q, dphiq);
    tp.accumulate(k, dphik);
    tp.accumulate(v, dv);
  });
}

/// Row-wise type-specific linear map: Y_i = X_i W[type_i].
inline Var typed_linear(Var x, std::span<const Var> weights, const std::vector<std::size_t>& row_type) {
  Tape& t = *x.tape;
  const Mat& xv = x.value();
  if (row_type.size() != xv.rows()) throw ShapeError("typed_linear: one type per row required");
  if (weights.empty()) throw ShapeError("typed_linear: no weights");
  const std::size_t out_cols = weights[0].value().cols();
  bool rg = t.requires_grad(x);
  for (Var w : weights) {
    if (w.value().rows() != xv.cols() || w.value().cols() != out_cols)
      throw ShapeError("typed_linear: weight " + w.value().shape_str() + " for input " + xv.shape_str());
    rg = rg || t.requires_grad(w);
  }
  Mat out(xv.rows(), out_cols);
  for (std::size_t i = 0; i < xv.rows(); ++i) {
    if (row_type[i] >= weights.size()) throw ShapeError("typed_linear: row type out of range");
    const Mat& w = weights[row_type[i]].value();
    double* orow = out.row(i).data();
    for (std::size_t a = 0; a < xv.cols(); ++a) {
      const double xa = xv(i, a);
      if (xa == 0.0) continue;
      const double* wrow = w.row(a).data();
      for (std::size_t b = 0; b < out_cols; ++b) orow[b] += xa * wrow[b];
    }
  }
  std::vector<Var> ws(weights.begin(), weights.end());
  return t.record("typed_linear", std::move(out), rg, [x, ws, &row_type](Tape& tp, const Mat& g) {
    const Mat& xv2 = tp.value(x);
    std::vector<Mat> dw;
    for (Var w : ws) dw.emplace_back(w.value().rows(), w.value().cols());
    Mat dx(xv2.rows(), xv2.cols());
    for (std::size_t i = 0; i < xv2.rows(); ++i) {
      const std::size_t ty = row_type[i];
      const Mat& w = tp.value(ws[ty]);
      const double* gi = g.row(i).data();
      for (std::size_t a = 0; a < xv2.cols(); ++a) {
        const double* wrow = w.row(a).data();
        double* dwrow = dw[ty].row(a).data();
        const double xa = xv2(i, a);
        double acc = 0.0;
        for (std::size_t b = 0; b < g.cols(); ++b) {
          acc += gi[b] * wrow[b];
          dwrow[b] += xa * gi[b];
        }
        dx(i, a) = acc;
      }
    }
    tp.accumulate(x, dx);
    for (std::size_t k = 0; k < ws.size(); ++k) tp.accumulate(ws[k], dw[k]);
  });
}

}  // namespace graphshield::encoder
