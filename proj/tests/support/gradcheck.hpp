#pragma once

// Central finite-difference oracle for tape gradients. Test-only.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "graphshield/numeric/tape.hpp"

namespace graphshield::testing {

struct GradCheckResult {
  double worst_relative_error = 0.0;
  std::string worst_param;
};

/// Builds the scalar loss on a fresh tape from the store's current values.
using LossBuilder = std::function<Var(Tape&, ParamStore&)>;

inline double loss_value(const LossBuilder& build, ParamStore& store) {
  Tape tape;
  const double v = build(tape, store).scalar();
  tape.clear();
  return v;
}

/// Compare tape gradients of every param with central differences.
/// Error per tensor is ||analytic - numeric|| / max(||analytic||, ||numeric||, floor).
inline GradCheckResult gradient_check(const LossBuilder& build, ParamStore& store, double step = 1e-5,
                                      double floor = 1e-6) {
  store.zero_grad();
  {
    Tape tape;
    Var loss = build(tape, store);
    tape.backward(loss);
  }
  GradCheckResult result;
  for (std::size_t p = 0; p < store.size(); ++p) {
    Param& param = store[p];
    const Mat analytic = param.grad;
    Mat numeric(analytic.rows(), analytic.cols());
    for (std::size_t i = 0; i < param.value.size(); ++i) {
      const double orig = param.value[i];
      param.value[i] = orig + step;
      const double up = loss_value(build, store);
      param.value[i] = orig - step;
      const double down = loss_value(build, store);
      param.value[i] = orig;
      numeric[i] = (up - down) / (2.0 * step);
    }
    double diff = 0.0, na = 0.0, nn = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
      diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
      na += analytic[i] * analytic[i];
      nn += numeric[i] * numeric[i];
    }
    const double rel = std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nn), floor});
    if (rel > result.worst_relative_error) {
      result.worst_relative_error = rel;
      result.worst_param = param.name;
    }
  }
  store.zero_grad();
  return result;
}

}  // namespace graphshield::testing
