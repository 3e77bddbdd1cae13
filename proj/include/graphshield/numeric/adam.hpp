#pragma once

#include <cmath>

#include "graphshield/error.hpp"
#include "graphshield/numeric/tape.hpp"

namespace graphshield {

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update of `p` from its accumulated gradient.
inline void adam_step(Param& p, const AdamOptions& opt) {
  if (!(opt.lr > 0.0)) throw ConfigError("lr", "learning rate must be positive");
  p.step += 1;
  const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(p.step));
  const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(p.step));
  for (std::size_t i = 0; i < p.value.size(); ++i) {
    const double g = p.grad[i];
    if (!std::isfinite(g)) throw NumericError("adam_step: non-finite gradient in " + p.name);
    double& m = p.first_moment[i];
    double& v = p.second_moment[i];
    m = opt.beta1 * m + (1.0 - opt.beta1) * g;
    v = opt.beta2 * v + (1.0 - opt.beta2) * g * g;
    const double mhat = m / c1;
    const double vhat = v / c2;
    p.value[i] -= opt.lr * mhat / (std::sqrt(vhat) + opt.eps);
  }
}

inline void adam_step(ParamStore& store, const AdamOptions& opt) {
  if (!(opt.lr > 0.0)) throw ConfigError("lr", "learning rate must be positive");
  for (std::size_t i = 0; i < store.size(); ++i) adam_step(store[i], opt);
}

}  // namespace graphshield
