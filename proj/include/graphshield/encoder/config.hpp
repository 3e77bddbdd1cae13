#pragma once

#include <cstddef>
#include <string>

#include "graphshield/error.hpp"
#include "graphshield/graph/types.hpp"

namespace graphshield::encoder {

enum class ReconstructionMode { Exact, Sampled };

struct EncoderConfig {
  std::size_t dim = 64;
  std::size_t layers = 3;
  std::size_t heads = 4;
  std::size_t input_dim = graph::kFeatureDim;
  double tau_init_logit = 0.0;
  ReconstructionMode reconstruction = ReconstructionMode::Sampled;
  /// Snapshots with at most this many active nodes use the exact spatial term
  /// even in sampled mode.
  std::size_t exact_reconstruction_limit = 64;

  std::size_t head_dim() const { return dim / heads; }

  void validate() const {
    if (dim == 0) throw ConfigError("encoder.dim", "must be positive");
    if (heads == 0 || dim % heads != 0) throw ConfigError("encoder.heads", "must divide encoder.dim");
    if (dim % 2 != 0) throw ConfigError("encoder.dim", "must be even for rotary encoding");
    if (layers == 0) throw ConfigError("encoder.layers", "must be at least 1");
    if (input_dim == 0) throw ConfigError("encoder.input_dim", "must be positive");
  }
};

inline std::string to_string(ReconstructionMode m) { return m == ReconstructionMode::Exact ? "exact" : "sampled"; }

inline ReconstructionMode parse_reconstruction_mode(const std::string& s) {
  if (s == "exact") return ReconstructionMode::Exact;
  if (s == "sampled") return ReconstructionMode::Sampled;
  throw ConfigError("encoder.reconstruction", "expected exact|sampled, got '" + s + "'");
}

}  // namespace graphshield::encoder
