#pragma once

#include <cstddef>
#include <vector>

#include "graphshield/causality/var.hpp"
#include "graphshield/numeric/rng.hpp"

namespace graphshield::causality {

/// Draw `length` observations from a Gaussian VAR after `burn_in` discarded steps.
inline RiskSeries simulate_var(const std::vector<Matrix>& coefficients, const Matrix& covariance, std::size_t length,
                               Rng& rng, std::size_t burn_in = 200) {
  const Index n = covariance.rows();
  Eigen::LLT<Matrix> llt(covariance);
  if (llt.info() != Eigen::Success) throw NumericError("simulate_var: covariance is not positive definite");
  const Matrix chol = llt.matrixL();
  const std::size_t total = length + burn_in, lags = coefficients.size();
  Matrix x = Matrix::Zero(static_cast<Index>(total), n);
  Vector e(n);
  for (std::size_t t = 0; t < total; ++t) {
    for (Index a = 0; a < n; ++a) e[a] = rng.normal();
    Vector v = chol * e;
    for (std::size_t l = 1; l <= lags && l <= t; ++l)
      v += coefficients[l - 1] * x.row(static_cast<Index>(t - l)).transpose();
    x.row(static_cast<Index>(t)) = v.transpose();
  }
  RiskSeries s;
  s.values = x.bottomRows(static_cast<Index>(length));
  for (Index j = 0; j < n; ++j) s.nodes.push_back(j);
  return s;
}

}  // namespace graphshield::causality
