#pragma once

// Differentiable primitives over Tape values.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "graphshield/numeric/mat.hpp"
#include "graphshield/numeric/tape.hpp"

namespace graphshield::ops {

namespace detail {

inline Tape& tape_of(Var a) { return *a.tape; }

inline void same_tape(Var a, Var b, const char* op) {
  if (a.tape != b.tape) throw ShapeError(std::string(op) + ": operands live on different tapes");
}

inline void same_shape(const Mat& a, const Mat& b, const char* op) {
  if (!a.same_shape(b)) throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}

template <typename F>
Mat map(const Mat& a, F f) {
  Mat out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

}  // namespace detail

inline double elu_value(double x) { return x > 0.0 ? x : std::expm1(x); }
inline double elu_slope(double x) { return x > 0.0 ? 1.0 : std::exp(x); }

inline double sigmoid_value(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline Var matmul(Var a, Var b) {
  detail::same_tape(a, b, "matmul");
  Tape& t = detail::tape_of(a);
  Mat out = graphshield::matmul(a.value(), b.value());
  const bool rg = t.requires_grad(a) || t.requires_grad(b);
  return t.record("matmul", std::move(out), rg, [a, b](Tape& tp, const Mat& g) {
    if (tp.requires_grad(a)) tp.accumulate(a, matmul_nt(g, tp.value(b)));
    if (tp.requires_grad(b)) tp.accumulate(b, matmul_tn(tp.value(a), g));
  });
}

inline Var add(Var a, Var b) {
  detail::same_tape(a, b, "add");
  detail::same_shape(a.value(), b.value(), "add");
  Tape& t = detail::tape_of(a);
  Mat out = a.value();
  out += b.value();
  return t.record("add", std::move(out), t.requires_grad(a) || t.requires_grad(b), [a, b](Tape& tp, const Mat& g) {
    tp.accumulate(a, g);
    tp.accumulate(b, g);
  });
}

inline Var sub(Var a, Var b) {
  detail::same_tape(a, b, "sub");
  detail::same_shape(a.value(), b.value(), "sub");
  Tape& t = detail::tape_of(a);
  Mat out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  return t.record("sub", std::move(out), t.requires_grad(a) || t.requires_grad(b), [a, b](Tape& tp, const Mat& g) {
    tp.accumulate(a, g);
    Mat ng = g;
    ng *= -1.0;
    tp.accumulate(b, ng);
  });
}

/// Elementwise product.
inline Var mul(Var a, Var b) {
  detail::same_tape(a, b, "mul");
  detail::same_shape(a.value(), b.value(), "mul");
  Tape& t = detail::tape_of(a);
  Mat out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return t.record("mul", std::move(out), t.requires_grad(a) || t.requires_grad(b), [a, b](Tape& tp, const Mat& g) {
    const Mat& av = tp.value(a);
    const Mat& bv = tp.value(b);
    if (tp.requires_grad(a)) {
      Mat ga = g;
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] *= bv[i];
      tp.accumulate(a, ga);
    }
    if (tp.requires_grad(b)) {
      Mat gb = g;
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] *= av[i];
      tp.accumulate(b, gb);
    }
  });
}

inline Var scale(Var a, double s) {
  Tape& t = detail::tape_of(a);
  Mat out = a.value();
  out *= s;
  return t.record("scale", std::move(out), t.requires_grad(a), [a, s](Tape& tp, const Mat& g) {
    Mat ga = g;
    ga *= s;
    tp.accumulate(a, ga);
  });
}

/// a + s, elementwise.
inline Var add_constant(Var a, double s) {
  Tape& t = detail::tape_of(a);
  Mat out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += s;
  return t.record("add_constant", std::move(out), t.requires_grad(a), [a](Tape& tp, const Mat& g) { tp.accumulate(a, g); });
}

/// Multiply every entry of `a` by the 1x1 value `s`.
inline Var scale_by(Var a, Var s) {
  detail::same_tape(a, s, "scale_by");
  if (s.value().size() != 1) throw ShapeError("scale_by: scale must be 1x1, got " + s.value().shape_str());
  Tape& t = detail::tape_of(a);
  Mat out = a.value();
  out *= s.value()[0];
  return t.record("scale_by", std::move(out), t.requires_grad(a) || t.requires_grad(s), [a, s](Tape& tp, const Mat& g) {
    const double sv = tp.value(s)[0];
    if (tp.requires_grad(a)) {
      Mat ga = g;
      ga *= sv;
      tp.accumulate(a, ga);
    }
    if (tp.requires_grad(s)) {
      const Mat& av = tp.value(a);
      double acc = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * av[i];
      tp.accumulate(s, Mat::scalar(acc));
    }
  });
}

/// Add a 1xC row to every row of an RxC matrix.
inline Var add_row(Var a, Var row) {
  detail::same_tape(a, row, "add_row");
  const Mat& av = a.value();
  const Mat& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != av.cols())
    throw ShapeError("add_row: row " + rv.shape_str() + " does not broadcast over " + av.shape_str());
  Tape& t = detail::tape_of(a);
  Mat out = av;
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += rv[j];
  return t.record("add_row", std::move(out), t.requires_grad(a) || t.requires_grad(row), [a, row](Tape& tp, const Mat& g) {
    tp.accumulate(a, g);
    if (tp.requires_grad(row)) {
      Mat gr(1, g.cols());
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) gr[j] += g(i, j);
      tp.accumulate(row, gr);
    }
  });
}

inline Var elu(Var a) {
  Tape& t = detail::tape_of(a);
  return t.record("elu", detail::map(a.value(), elu_value), t.requires_grad(a), [a](Tape& tp, const Mat& g) {
    const Mat& x = tp.value(a);
    Mat ga = g;
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] *= elu_slope(x[i]);
    tp.accumulate(a, ga);
  });
}

inline Var relu(Var a) {
  Tape& t = detail::tape_of(a);
  return t.record("relu", detail::map(a.value(), [](double x) { return x > 0.0 ? x : 0.0; }), t.requires_grad(a),
                  [a](Tape& tp, const Mat& g) {
                    const Mat& x = tp.value(a);
                    Mat ga = g;
                    for (std::size_t i = 0; i < ga.size(); ++i)
                      if (x[i] <= 0.0) ga[i] = 0.0;
                    tp.accumulate(a, ga);
                  });
}

inline Var sigmoid(Var a) {
  Tape& t = detail::tape_of(a);
  Mat out = detail::map(a.value(), sigmoid_value);
  Mat saved = out;
  return t.record("sigmoid", std::move(out), t.requires_grad(a), [a, saved](Tape& tp, const Mat& g) {
    Mat ga = g;
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] *= saved[i] * (1.0 - saved[i]);
    tp.accumulate(a, ga);
  });
}

/// Natural log; entries must be positive.
inline Var log(Var a) {
  const Mat& x = a.value();
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!(x[i] > 0.0)) throw NumericError("log: non-positive argument " + std::to_string(x[i]));
  Tape& t = detail::tape_of(a);
  return t.record("log", detail::map(x, [](double v) { return std::log(v); }), t.requires_grad(a),
                  [a](Tape& tp, const Mat& g) {
                    const Mat& xv = tp.value(a);
                    Mat ga = g;
                    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] /= xv[i];
                    tp.accumulate(a, ga);
                  });
}

inline Var rowwise_softmax(Var a) {
  Tape& t = detail::tape_of(a);
  const Mat& x = a.value();
  Mat out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto r = x.row(i);
    const double m = *std::max_element(r.begin(), r.end());
    double s = 0.0;
    for (std::size_t j = 0; j < x.cols(); ++j) s += (out(i, j) = std::exp(r[j] - m));
    for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) /= s;
  }
  Mat saved = out;
  return t.record("rowwise_softmax", std::move(out), t.requires_grad(a), [a, saved](Tape& tp, const Mat& g) {
    Mat ga(g.rows(), g.cols());
    for (std::size_t i = 0; i < g.rows(); ++i) {
      const double d = dot(g.row(i), saved.row(i));
      for (std::size_t j = 0; j < g.cols(); ++j) ga(i, j) = saved(i, j) * (g(i, j) - d);
    }
    tp.accumulate(a, ga);
  });
}

/// log(sum_j exp(a_ij)) per row, as an Rx1 column.
inline Var rowwise_logsumexp(Var a) {
  Tape& t = detail::tape_of(a);
  const Mat& x = a.value();
  Mat out(x.rows(), 1);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto r = x.row(i);
    const double m = *std::max_element(r.begin(), r.end());
    double s = 0.0;
    for (double v : r) s += std::exp(v - m);
    out(i, 0) = m + std::log(s);
  }
  Mat saved = out;
  return t.record("rowwise_logsumexp", std::move(out), t.requires_grad(a), [a, saved](Tape& tp, const Mat& g) {
    const Mat& xv = tp.value(a);
    Mat ga(xv.rows(), xv.cols());
    for (std::size_t i = 0; i < xv.rows(); ++i)
      for (std::size_t j = 0; j < xv.cols(); ++j) ga(i, j) = g(i, 0) * std::exp(xv(i, j) - saved(i, 0));
    tp.accumulate(a, ga);
  });
}

/// Horizontal concatenation.
inline Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat: no operands");
  Tape& t = detail::tape_of(parts[0]);
  const std::size_t rows = parts[0].value().rows();
  std::size_t cols = 0;
  bool rg = false;
  for (Var p : parts) {
    detail::same_tape(parts[0], p, "concat");
    if (p.value().rows() != rows)
      throw ShapeError("concat: row mismatch " + parts[0].value().shape_str() + " vs " + p.value().shape_str());
    cols += p.value().cols();
    rg = rg || t.requires_grad(p);
  }
  Mat out(rows, cols);
  std::size_t off = 0;
  for (Var p : parts) {
    const Mat& v = p.value();
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < v.cols(); ++j) out(i, off + j) = v(i, j);
    off += v.cols();
  }
  std::vector<Var> saved(parts.begin(), parts.end());
  return t.record("concat", std::move(out), rg, [saved](Tape& tp, const Mat& g) {
    std::size_t o = 0;
    for (Var p : saved) {
      const std::size_t c = tp.value(p).cols();
      if (tp.requires_grad(p)) {
        Mat gp(g.rows(), c);
        for (std::size_t i = 0; i < g.rows(); ++i)
          for (std::size_t j = 0; j < c; ++j) gp(i, j) = g(i, o + j);
        tp.accumulate(p, gp);
      }
      o += c;
    }
  });
}

inline Var transpose(Var a) {
  Tape& t = detail::tape_of(a);
  return t.record("transpose", graphshield::transpose(a.value()), t.requires_grad(a),
                  [a](Tape& tp, const Mat& g) { tp.accumulate(a, graphshield::transpose(g)); });
}

/// Squared Frobenius norm, 1x1.
inline Var frobenius_sq(Var a) {
  Tape& t = detail::tape_of(a);
  double s = 0.0;
  for (double v : a.value().data()) s += v * v;
  return t.record("frobenius_sq", Mat::scalar(s), t.requires_grad(a), [a](Tape& tp, const Mat& g) {
    Mat ga = tp.value(a);
    ga *= 2.0 * g[0];
    tp.accumulate(a, ga);
  });
}

/// Sum of all entries, 1x1.
inline Var sum(Var a) {
  Tape& t = detail::tape_of(a);
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return t.record("sum", Mat::scalar(s), t.requires_grad(a), [a](Tape& tp, const Mat& g) {
    const Mat& av = tp.value(a);
    tp.accumulate(a, Mat(av.rows(), av.cols(), g[0]));
  });
}

inline Var mean(Var a) {
  const std::size_t n = a.value().size();
  if (n == 0) throw ShapeError("mean: empty operand");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

/// Column sums as a 1xC row.
inline Var column_sums(Var a) {
  Tape& t = detail::tape_of(a);
  const Mat& x = a.value();
  Mat out(1, x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) out[j] += x(i, j);
  return t.record("column_sums", std::move(out), t.requires_grad(a), [a](Tape& tp, const Mat& g) {
    const Mat& xv = tp.value(a);
    Mat ga(xv.rows(), xv.cols());
    for (std::size_t i = 0; i < xv.rows(); ++i)
      for (std::size_t j = 0; j < xv.cols(); ++j) ga(i, j) = g[j];
    tp.accumulate(a, ga);
  });
}

/// Select a subset of rows (duplicates allowed).
inline Var gather_rows(Var a, std::vector<std::size_t> rows) {
  Tape& t = detail::tape_of(a);
  const Mat& x = a.value();
  Mat out(rows.size(), x.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= x.rows()) throw ShapeError("gather_rows: row index out of range");
    std::copy(x.row(rows[r]).begin(), x.row(rows[r]).end(), out.row(r).begin());
  }
  return t.record("gather_rows", std::move(out), t.requires_grad(a), [a, rows = std::move(rows)](Tape& tp, const Mat& g) {
    Mat& ga = tp.grad_buffer(a);
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t j = 0; j < g.cols(); ++j) ga(rows[r], j) += g(r, j);
  });
}

/// sigmoid(logit) * a + (1 - sigmoid(logit)) * b, with a 1x1 trainable logit.
inline Var residual_mix(Var logit, Var a, Var b) {
  detail::same_tape(logit, a, "residual_mix");
  detail::same_tape(a, b, "residual_mix");
  detail::same_shape(a.value(), b.value(), "residual_mix");
  if (logit.value().size() != 1) throw ShapeError("residual_mix: logit must be 1x1");
  Tape& t = detail::tape_of(a);
  const double tau = sigmoid_value(logit.value()[0]);
  Mat out(a.value().rows(), a.value().cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = b.value()[i] + tau * (a.value()[i] - b.value()[i]);
  const bool rg = t.requires_grad(logit) || t.requires_grad(a) || t.requires_grad(b);
  return t.record("residual_mix", std::move(out), rg, [logit, a, b, tau](Tape& tp, const Mat& g) {
    if (tp.requires_grad(a)) {
      Mat ga = g;
      ga *= tau;
      tp.accumulate(a, ga);
    }
    if (tp.requires_grad(b)) {
      Mat gb = g;
      gb *= 1.0 - tau;
      tp.accumulate(b, gb);
    }
    if (tp.requires_grad(logit)) {
      const Mat& av = tp.value(a);
      const Mat& bv = tp.value(b);
      double acc = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * (av[i] - bv[i]);
      tp.accumulate(logit, Mat::scalar(acc * tau * (1.0 - tau)));
    }
  });
}

}  // namespace graphshield::ops
