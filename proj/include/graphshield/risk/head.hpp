#pragma once

// Fully connected responsibility network: each layer is
// BatchNorm(ReLU(W h + b)); a softmax over the final width gives the
// per-component responsibilities.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "graphshield/error.hpp"
#include "graphshield/numeric/ops.hpp"
#include "graphshield/numeric/rng.hpp"
#include "graphshield/numeric/tape.hpp"

namespace graphshield::risk {

struct HeadConfig {
  std::size_t layers = 3;
  std::size_t hidden = 32;
  std::size_t components = 2;
  double bn_eps = 1e-5;
  double bn_momentum = 0.1;

  void validate() const {
    if (layers == 0) throw ConfigError("head.layers", "must be at least 1");
    if (hidden == 0) throw ConfigError("head.hidden", "must be positive");
    if (components < 2) throw ConfigError("head.components", "need at least 2 mixture components");
    if (!(bn_eps > 0.0)) throw ConfigError("head.bn_eps", "must be positive");
    if (!(bn_momentum > 0.0 && bn_momentum <= 1.0)) throw ConfigError("head.bn_momentum", "must lie in (0, 1]");
  }
};

enum class Mode { Train, Eval };

namespace names {
inline std::string layer(std::size_t l, const char* field) { return "head.layer" + std::to_string(l) + "." + field; }
}  // namespace names

inline void init_head(ParamStore& store, const HeadConfig& cfg, std::size_t input_dim, Rng& rng) {
  cfg.validate();
  std::size_t in = input_dim;
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    const std::size_t out = l + 1 == cfg.layers ? cfg.components : cfg.hidden;
    const double a = std::sqrt(6.0 / static_cast<double>(in));
    Mat w(in, out);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-a, a);
    store.add(names::layer(l, "weight"), std::move(w));
    store.add(names::layer(l, "bias"), Mat(1, out));
    store.add(names::layer(l, "bn_scale"), Mat(1, out, 1.0));
    store.add(names::layer(l, "bn_shift"), Mat(1, out));
    store.add(names::layer(l, "running_mean"), Mat(1, out));
    store.add(names::layer(l, "running_var"), Mat(1, out, 1.0));
    in = out;
  }
}

/// Column-wise batch normalization with affine scale/shift. Train mode uses
/// batch statistics (biased variance) and, when `running` is given, updates the
/// running mean and unbiased variance with `momentum`. Eval mode normalizes
/// with the stored running statistics.
inline Var batch_norm(Var x, Var scale, Var shift, Mode mode, double eps, Param* running_mean = nullptr,
                      Param* running_var = nullptr, double momentum = 0.1) {
  Tape& t = *x.tape;
  const Mat& xv = x.value();
  const std::size_t n = xv.rows(), c = xv.cols();
  if (scale.value().rows() != 1 || scale.value().cols() != c || !shift.value().same_shape(scale.value()))
    throw ShapeError("batch_norm: scale/shift " + scale.value().shape_str() + " for input " + xv.shape_str());
  Mat mean(1, c), inv_std(1, c);
  if (mode == Mode::Train) {
    if (n < 2) throw NumericError("batch_norm: training mode needs at least 2 rows, got " + std::to_string(n));
    Mat var(1, c);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < c; ++j) mean(0, j) += xv(i, j);
    for (std::size_t j = 0; j < c; ++j) mean(0, j) /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < c; ++j) {
        const double dlt = xv(i, j) - mean(0, j);
        var(0, j) += dlt * dlt;
      }
    for (std::size_t j = 0; j < c; ++j) {
      var(0, j) /= static_cast<double>(n);
      inv_std(0, j) = 1.0 / std::sqrt(var(0, j) + eps);
    }
    if (running_mean && running_var) {
      const double unbias = static_cast<double>(n) / static_cast<double>(n - 1);
      for (std::size_t j = 0; j < c; ++j) {
        running_mean->value[j] = (1.0 - momentum) * running_mean->value[j] + momentum * mean(0, j);
        running_var->value[j] = (1.0 - momentum) * running_var->value[j] + momentum * var(0, j) * unbias;
      }
    }
  } else {
    if (!running_mean || !running_var) throw NumericError("batch_norm: eval mode needs running statistics");
    for (std::size_t j = 0; j < c; ++j) {
      mean(0, j) = running_mean->value[j];
      inv_std(0, j) = 1.0 / std::sqrt(running_var->value[j] + eps);
    }
  }
  Mat xhat(n, c), out(n, c);
  const Mat& sc = scale.value();
  const Mat& sh = shift.value();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      xhat(i, j) = (xv(i, j) - mean(0, j)) * inv_std(0, j);
      out(i, j) = sc(0, j) * xhat(i, j) + sh(0, j);
    }
  const bool rg = t.requires_grad(x) || t.requires_grad(scale) || t.requires_grad(shift);
  return t.record("batch_norm", std::move(out), rg, [x, scale, shift, mode, xhat, inv_std](Tape& tp, const Mat& g) {
    const std::size_t rows = g.rows(), cols = g.cols();
    const Mat& sc2 = tp.value(scale);
    Mat dscale(1, cols), dshift(1, cols), dx(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) {
        dscale(0, j) += g(i, j) * xhat(i, j);
        dshift(0, j) += g(i, j);
      }
    const double nn = static_cast<double>(rows);
    for (std::size_t j = 0; j < cols; ++j)
      for (std::size_t i = 0; i < rows; ++i) {
        const double dxhat = g(i, j) * sc2(0, j);
        if (mode == Mode::Train) {
          const double sum_dxhat = dshift(0, j) * sc2(0, j);
          const double sum_dxhat_xhat = dscale(0, j) * sc2(0, j);
          dx(i, j) = inv_std(0, j) / nn * (nn * dxhat - sum_dxhat - xhat(i, j) * sum_dxhat_xhat);
        } else {
          dx(i, j) = dxhat * inv_std(0, j);
        }
      }
    tp.accumulate(x, dx);
    tp.accumulate(scale, dscale);
    tp.accumulate(shift, dshift);
  });
}

/// Responsibilities gamma (N x K). In train mode running statistics are
/// updated only when `update_running` is set.
inline Var responsibilities(Tape& t, ParamStore& store, const HeadConfig& cfg, Var z, Mode mode,
                            bool update_running = true) {
  cfg.validate();
  Var h = z;
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    Var w = t.param(store.at(names::layer(l, "weight")));
    if (w.value().rows() != h.value().cols())
      throw ShapeError("responsibilities: layer " + std::to_string(l) + " expects width " +
                       std::to_string(w.value().rows()) + ", got " + std::to_string(h.value().cols()));
    Var pre = ops::add_row(ops::matmul(h, w), t.param(store.at(names::layer(l, "bias"))));
    Param* rm = &store.at(names::layer(l, "running_mean"));
    Param* rv = &store.at(names::layer(l, "running_var"));
    const bool track = mode == Mode::Eval || update_running;
    h = batch_norm(ops::relu(pre), t.param(store.at(names::layer(l, "bn_scale"))),
                   t.param(store.at(names::layer(l, "bn_shift"))), mode, cfg.bn_eps, track ? rm : nullptr,
                   track ? rv : nullptr, cfg.bn_momentum);
  }
  return ops::rowwise_softmax(h);
}

/// Forward-only evaluation with running statistics.
inline Mat responsibilities(ParamStore& store, const HeadConfig& cfg, const Mat& z) {
  Tape t;
  Mat out = responsibilities(t, store, cfg, t.constant(z), Mode::Eval).value();
  t.clear();
  return out;
}

}  // namespace graphshield::risk
