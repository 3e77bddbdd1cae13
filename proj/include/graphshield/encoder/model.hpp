#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "graphshield/encoder/attention.hpp"
#include "graphshield/encoder/config.hpp"
#include "graphshield/encoder/layout.hpp"
#include "graphshield/encoder/rotary.hpp"
#include "graphshield/numeric/ops.hpp"
#include "graphshield/numeric/rng.hpp"
#include "graphshield/numeric/tape.hpp"

namespace graphshield::encoder {

namespace names {
inline std::string input(std::size_t slot) { return "encoder.input.type" + std::to_string(slot); }
inline std::string spatial(std::size_t layer, char which, std::size_t slot) {
  return "encoder.layer" + std::to_string(layer) + ".spatial." + which + ".type" + std::to_string(slot);
}
inline std::string temporal(std::size_t layer, char which) {
  return "encoder.layer" + std::to_string(layer) + ".temporal." + which;
}
inline std::string tau(std::size_t layer, int which) {
  return "encoder.layer" + std::to_string(layer) + ".tau" + std::to_string(which);
}
}  // namespace names

/// Glorot-uniform matrix.
inline Mat glorot(std::size_t rows, std::size_t cols, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Mat m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = rng.uniform(-a, a);
  return m;
}

/// Register all encoder parameters for `type_count` node-type slots.
inline void init_encoder(ParamStore& store, const EncoderConfig& cfg, std::size_t type_count, Rng& rng) {
  cfg.validate();
  if (type_count == 0) throw ConfigError("encoder.node_types", "at least one node type required");
  for (std::size_t k = 0; k < type_count; ++k) store.add(names::input(k), glorot(cfg.input_dim, cfg.dim, rng));
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    for (char w : {'q', 'k', 'v'})
      for (std::size_t k = 0; k < type_count; ++k) store.add(names::spatial(l, w, k), glorot(cfg.dim, cfg.dim, rng));
    for (char w : {'q', 'k', 'v'}) store.add(names::temporal(l, w), glorot(cfg.dim, cfg.dim, rng));
    store.add(names::tau(l, 1), Mat::scalar(cfg.tau_init_logit));
    store.add(names::tau(l, 2), Mat::scalar(cfg.tau_init_logit));
  }
}

/// Number of node-type slots registered in `store`.
inline std::size_t encoder_type_count(const ParamStore& store) {
  std::size_t k = 0;
  while (store.contains(names::input(k))) ++k;
  return k;
}

namespace detail {
inline std::vector<Var> typed_params(Tape& t, ParamStore& store, std::size_t types,
                                     const std::function<std::string(std::size_t)>& name) {
  std::vector<Var> out;
  for (std::size_t k = 0; k < types; ++k) out.push_back(t.param(store.at(name(k))));
  return out;
}
}  // namespace detail

/// One sandwich layer: spatial attention within snapshots, then rotary encoding
/// and temporal attention along each node's chain.
inline Var encoder_layer(Tape& t, ParamStore& store, const EncoderConfig& cfg, const RowLayout& lay, Var h,
                         std::size_t layer) {
  const std::size_t types = encoder_type_count(store);
  auto q = detail::typed_params(t, store, types, [&](std::size_t k) { return names::spatial(layer, 'q', k); });
  auto k = detail::typed_params(t, store, types, [&](std::size_t s) { return names::spatial(layer, 'k', s); });
  auto v = detail::typed_params(t, store, types, [&](std::size_t s) { return names::spatial(layer, 'v', s); });
  Var m = neighbor_attention(typed_linear(h, q, lay.type_slot), typed_linear(h, k, lay.type_slot),
                             typed_linear(h, v, lay.type_slot), lay.spatial, cfg.heads);
  Var h1 = ops::residual_mix(t.param(store.at(names::tau(layer, 1))), h, m);

  Var r = rotary(h1, lay.time);
  Var tq = ops::matmul(r, t.param(store.at(names::temporal(layer, 'q'))));
  Var tk = ops::matmul(r, t.param(store.at(names::temporal(layer, 'k'))));
  Var tv = ops::matmul(r, t.param(store.at(names::temporal(layer, 'v'))));
  Var mt = group_attention(tq, tk, tv, lay.chains, cfg.heads);
  return ops::residual_mix(t.param(store.at(names::tau(layer, 2))), h1, mt);
}

/// Final embeddings, one row per layout row. `lay` must outlive the tape's backward pass.
inline Var encode(Tape& t, ParamStore& store, const EncoderConfig& cfg, const RowLayout& lay, const Mat& features) {
  cfg.validate();
  if (features.rows() != lay.rows() || features.cols() != cfg.input_dim)
    throw ShapeError("encode: features " + features.shape_str() + " for " + std::to_string(lay.rows()) + " rows of width " +
                     std::to_string(cfg.input_dim));
  const std::size_t types = encoder_type_count(store);
  auto w_in = detail::typed_params(t, store, types, names::input);
  Var h = typed_linear(t.constant(features), w_in, lay.type_slot);
  for (std::size_t l = 0; l < cfg.layers; ++l) h = encoder_layer(t, store, cfg, lay, h, l);
  return h;
}

/// Forward-only convenience wrapper.
inline Mat encode(ParamStore& store, const EncoderConfig& cfg, const RowLayout& lay, const Mat& features) {
  Tape t;
  Mat z = encode(t, store, cfg, lay, features).value();
  t.clear();
  return z;
}

}  // namespace graphshield::encoder
