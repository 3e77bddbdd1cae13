#pragma once

// Support-constrained sparse vector autoregression
//
//   p_t = sum_{l=1..I} O_l p_{t-l} + e_t,   e_t ~ N(0, Omega^{-1})
//
// where (O_l)_{ij} is the effect of series j at lag l on series i. Fitted by
// penalized maximum likelihood with alternating proximal-gradient steps on the
// coefficients and the precision matrix.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "graphshield/error.hpp"
#include "graphshield/graph/types.hpp"

namespace graphshield::causality {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// T x n panel, column j = series of node j.
struct RiskSeries {
  Matrix values;
  std::vector<graph::NodeId> nodes;

  std::size_t length() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t width() const { return static_cast<std::size_t>(values.cols()); }
};

enum class Objective {
  /// 1/2 sum e' Omega e - (T/2) log|Omega|: the Gaussian negative log-likelihood.
  Gaussian,
  /// sum e' Omega e - (n/2) log|Omega|.
  StrictPaper,
};

struct ForcedZero {
  enum class Kind { Coefficient, Precision };
  Kind kind = Kind::Coefficient;
  std::size_t i = 0;
  std::size_t j = 0;
  std::size_t lag = 1;  // coefficients only
};

struct VarSpec {
  std::size_t lags = 1;
  /// Allowed coefficient entries, one n x n 0/1 mask per lag or a single mask
  /// shared by every lag. Empty means unconstrained. Diagonals are always allowed.
  std::vector<Matrix> temporal_masks;
  /// Allowed off-diagonal precision entries. Empty means unconstrained.
  Matrix spatial_mask;
  double lambda_precision = 0.0;
  double lambda_coefficient = 0.0;
  Objective objective = Objective::Gaussian;
  std::size_t max_iterations = 10000;
  double tolerance = 1e-8;
  /// Number of leading rows excluded from the likelihood; at least `lags`.
  /// Set to the largest candidate lag to compare fits on a common sample.
  std::size_t sample_start = 0;
  std::vector<ForcedZero> zeros;
};

struct VarFit {
  std::size_t lags = 0;
  std::vector<Matrix> coefficients;  // O_1..O_I
  Matrix precision;
  Matrix covariance;
  Matrix residuals;
  std::size_t samples = 0;
  double loglik = 0.0;
  double aic = 0.0;
  double objective = 0.0;
  std::size_t nonzero = 0;
  std::size_t iterations = 0;
  std::size_t eigen_floor_events = 0;
  bool converged = false;
  std::vector<double> objective_trace;

  const Matrix& coefficient(std::size_t lag) const {
    if (lag < 1 || lag > coefficients.size())
      throw std::out_of_range("lag " + std::to_string(lag) + " outside 1.." + std::to_string(coefficients.size()));
    return coefficients[lag - 1];
  }
};

inline constexpr double kEigenFloor = 1e-6;

namespace detail {

inline double soft(double x, double t) { return x > t ? x - t : (x < -t ? x + t : 0.0); }

struct Problem {
  std::size_t n = 0, lags = 0, samples = 0;
  Matrix xtx, xty, yty;          // sufficient statistics
  Matrix coef_mask;              // (n*lags) x n, 1 = free
  Matrix prec_mask;              // n x n, 1 = free
  double a = 0.5, c = 0.0;       // objective weights
  double lambda_prec = 0.0, lambda_coef = 0.0;
};

inline Matrix mask_for_lag(const VarSpec& spec, std::size_t lag, std::size_t n) {
  Matrix m = Matrix::Ones(static_cast<Index>(n), static_cast<Index>(n));
  if (!spec.temporal_masks.empty()) {
    const Matrix& src = spec.temporal_masks.size() == 1 ? spec.temporal_masks[0] : spec.temporal_masks.at(lag - 1);
    if (src.rows() != static_cast<Index>(n) || src.cols() != static_cast<Index>(n))
      throw ShapeError("fit_var: temporal mask is " + std::to_string(src.rows()) + "x" + std::to_string(src.cols()) +
                       " for " + std::to_string(n) + " series");
    m = (src.array() != 0.0).cast<double>();
  }
  m.diagonal().setOnes();
  return m;
}

inline Problem build_problem(const RiskSeries& series, const VarSpec& spec) {
  const std::size_t n = series.width(), tt = series.length();
  if (n == 0) throw DataError("fit_var: no series");
  if (spec.lags == 0) throw ConfigError("lags", "must be at least 1");
  if (spec.temporal_masks.size() > 1 && spec.temporal_masks.size() != spec.lags)
    throw ShapeError("fit_var: " + std::to_string(spec.temporal_masks.size()) + " temporal masks for " +
                     std::to_string(spec.lags) + " lags");
  if (spec.lambda_precision < 0.0 || spec.lambda_coefficient < 0.0) throw ConfigError("lambda", "penalties must be nonnegative");
  const std::size_t start = std::max(spec.sample_start, spec.lags);
  if (tt <= start || tt - start <= n * spec.lags + 5)
    throw DataError("fit_var: series of length " + std::to_string(tt) + " too short for " + std::to_string(n) +
                    " series at lag " + std::to_string(spec.lags));
  Problem p;
  p.n = n;
  p.lags = spec.lags;
  p.samples = tt - start;
  const auto nn = static_cast<Index>(n), rows = static_cast<Index>(p.samples);
  Matrix x(rows, nn * static_cast<Index>(spec.lags)), y(rows, nn);
  for (Index r = 0; r < rows; ++r) {
    const Index t = static_cast<Index>(start) + r;
    y.row(r) = series.values.row(t);
    for (std::size_t l = 1; l <= spec.lags; ++l)
      x.block(r, static_cast<Index>(l - 1) * nn, 1, nn) = series.values.row(t - static_cast<Index>(l));
  }
  p.xtx = x.transpose() * x;
  p.xty = x.transpose() * y;
  p.yty = y.transpose() * y;
  p.coef_mask = Matrix(nn * static_cast<Index>(spec.lags), nn);
  for (std::size_t l = 1; l <= spec.lags; ++l)
    p.coef_mask.block(static_cast<Index>(l - 1) * nn, 0, nn, nn) = mask_for_lag(spec, l, n).transpose();
  p.prec_mask = Matrix::Ones(nn, nn);
  if (spec.spatial_mask.size() != 0) {
    if (spec.spatial_mask.rows() != nn || spec.spatial_mask.cols() != nn) throw ShapeError("fit_var: spatial mask shape");
    p.prec_mask = (spec.spatial_mask.array() != 0.0).cast<double>();
    p.prec_mask = p.prec_mask.cwiseProduct(p.prec_mask.transpose()).eval();
  }
  p.prec_mask.diagonal().setOnes();
  for (const auto& z : spec.zeros) {
    if (z.i >= n || z.j >= n) throw ShapeError("fit_var: forced zero outside the panel");
    if (z.kind == ForcedZero::Kind::Coefficient) {
      if (z.lag < 1 || z.lag > spec.lags) throw ShapeError("fit_var: forced zero lag out of range");
      p.coef_mask(static_cast<Index>((z.lag - 1) * n + z.j), static_cast<Index>(z.i)) = 0.0;
    } else {
      if (z.i == z.j) throw ShapeError("fit_var: diagonal precision entries cannot be forced to zero");
      p.prec_mask(static_cast<Index>(z.i), static_cast<Index>(z.j)) = 0.0;
      p.prec_mask(static_cast<Index>(z.j), static_cast<Index>(z.i)) = 0.0;
    }
  }
  if (spec.objective == Objective::Gaussian) {
    p.a = 0.5;
    p.c = 0.5 * static_cast<double>(p.samples);
  } else {
    p.a = 1.0;
    p.c = 0.5 * static_cast<double>(n);
  }
  p.lambda_prec = spec.lambda_precision;
  p.lambda_coef = spec.lambda_coefficient;
  return p;
}

// Residual scatter sum e e' for coefficients B ((n*I) x n, Y ~ X B).
inline Matrix scatter(const Problem& p, const Matrix& b) {
  Matrix s = p.yty - b.transpose() * p.xty - p.xty.transpose() * b + b.transpose() * p.xtx * b;
  return 0.5 * (s + s.transpose());
}

inline double log_det_pd(const Matrix& m, bool* ok) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) {
    *ok = false;
    return 0.0;
  }
  *ok = true;
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

inline double offdiag_l1(const Matrix& m) { return m.cwiseAbs().sum() - m.diagonal().cwiseAbs().sum(); }

inline double smooth_precision_part(const Problem& p, const Matrix& omega, const Matrix& s, bool* ok) {
  const double ld = log_det_pd(omega, ok);
  if (!*ok) return std::numeric_limits<double>::infinity();
  return p.a * (omega.cwiseProduct(s)).sum() - p.c * ld;
}

inline double objective(const Problem& p, const Matrix& b, const Matrix& omega) {
  bool ok = true;
  const double smooth = smooth_precision_part(p, omega, scatter(p, b), &ok);
  return smooth + p.lambda_prec * offdiag_l1(omega) + p.lambda_coef * b.cwiseAbs().sum();
}

inline Matrix floor_eigenvalues(const Matrix& m, double floor) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()));
  Vector ev = es.eigenvalues().cwiseMax(floor);
  Matrix out = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

// Per-equation least squares restricted to each equation's free regressors.
inline Matrix masked_least_squares(const Problem& p) {
  const Index k = p.xtx.rows(), nn = static_cast<Index>(p.n);
  Matrix b = Matrix::Zero(k, nn);
  for (Index i = 0; i < nn; ++i) {
    std::vector<Index> free;
    for (Index r = 0; r < k; ++r)
      if (p.coef_mask(r, i) != 0.0) free.push_back(r);
    if (free.empty()) continue;
    const auto m = static_cast<Index>(free.size());
    Matrix a(m, m);
    Vector rhs(m);
    for (Index u = 0; u < m; ++u) {
      rhs[u] = p.xty(free[static_cast<std::size_t>(u)], i);
      for (Index v = 0; v < m; ++v) a(u, v) = p.xtx(free[static_cast<std::size_t>(u)], free[static_cast<std::size_t>(v)]);
    }
    const Vector sol = a.ldlt().solve(rhs);
    for (Index u = 0; u < m; ++u) b(free[static_cast<std::size_t>(u)], i) = sol[u];
  }
  return b;
}

}  // namespace detail

/// Gaussian log-likelihood of the residual scatter `s` over `samples` rows.
inline double gaussian_loglik(const Matrix& omega, const Matrix& s, std::size_t samples) {
  bool ok = true;
  const double ld = detail::log_det_pd(omega, &ok);
  if (!ok) throw NumericError("gaussian_loglik: precision is not positive definite");
  const double t = static_cast<double>(samples), n = static_cast<double>(omega.rows());
  return -0.5 * t * n * std::log(2.0 * std::numbers::pi) + 0.5 * t * ld - 0.5 * (omega.cwiseProduct(s)).sum();
}

inline VarFit fit_var(const RiskSeries& series, const VarSpec& spec) {
  const detail::Problem p = detail::build_problem(series, spec);
  const auto nn = static_cast<Index>(p.n);

  // Warm start: masked least squares and the matching residual precision.
  Matrix b = detail::masked_least_squares(p);
  Matrix s = detail::scatter(p, b);
  const double scale = p.c / p.a;
  Matrix omega;
  {
    Matrix cov = s / scale;
    if (Eigen::LLT<Matrix>(cov).info() != Eigen::Success) cov.diagonal().array() += kEigenFloor;
    omega = cov.inverse();
    omega = omega.cwiseProduct(p.prec_mask);
    omega = (0.5 * (omega + omega.transpose())).eval();
    Eigen::LLT<Matrix> llt(omega);
    if (llt.info() != Eigen::Success) {
      omega = Matrix::Zero(nn, nn);
      omega.diagonal() = (scale / s.diagonal().array().max(kEigenFloor)).matrix();
    }
  }

  VarFit fit;
  fit.lags = p.lags;
  double f = detail::objective(p, b, omega);
  fit.objective_trace.push_back(f);
  double eta = 1.0;
  std::size_t increases = 0;
  const double xtx_max = Eigen::SelfAdjointEigenSolver<Matrix>(p.xtx, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();

  for (std::size_t it = 1; it <= spec.max_iterations; ++it) {
    // Coefficient step: exact Lipschitz constant of the smooth part.
    const double om_max = Eigen::SelfAdjointEigenSolver<Matrix>(omega, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
    const double lip = 2.0 * p.a * xtx_max * om_max;
    if (lip > 0.0) {
      const Matrix grad = -2.0 * p.a * (p.xty - p.xtx * b) * omega;
      Matrix next = b - grad / lip;
      const double thr = p.lambda_coef / lip;
      for (Index i = 0; i < next.size(); ++i) next(i) = p.coef_mask(i) != 0.0 ? detail::soft(next(i), thr) : 0.0;
      b = std::move(next);
    }
    s = detail::scatter(p, b);

    // Precision step with backtracking on the composite objective.
    bool ok = true;
    const double h0 = detail::smooth_precision_part(p, omega, s, &ok);
    Eigen::LLT<Matrix> llt(omega);
    const Matrix grad = p.a * s - p.c * llt.solve(Matrix::Identity(nn, nn));
    eta = std::min(eta * 2.0, 1e6);
    Matrix candidate;
    bool accepted = false;
    for (int tries = 0; tries < 80; ++tries, eta *= 0.5) {
      candidate = omega - eta * grad;
      for (Index r = 0; r < nn; ++r)
        for (Index col = 0; col < nn; ++col) {
          if (r == col) continue;
          candidate(r, col) = p.prec_mask(r, col) != 0.0 ? detail::soft(candidate(r, col), eta * p.lambda_prec) : 0.0;
        }
      candidate = (0.5 * (candidate + candidate.transpose())).eval();
      bool pd = true;
      const double h1 = detail::smooth_precision_part(p, candidate, s, &pd);
      if (!pd) continue;
      const Matrix diff = candidate - omega;
      if (h1 <= h0 + grad.cwiseProduct(diff).sum() + diff.squaredNorm() / (2.0 * eta) + 1e-12 * std::abs(h0)) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      candidate = detail::floor_eigenvalues(candidate.cwiseProduct(p.prec_mask), kEigenFloor);
      ++fit.eigen_floor_events;
      eta = 1.0;
    }
    omega = std::move(candidate);

    const double f_new = detail::objective(p, b, omega);
    fit.objective_trace.push_back(f_new);
    fit.iterations = it;
    increases = f_new > f + 1e-12 * std::max(1.0, std::abs(f)) ? increases + 1 : 0;
    if (increases >= 50) throw NumericError("fit_var: objective increased for 50 consecutive iterations");
    const double rel = std::abs(f - f_new) / std::max(1.0, std::abs(f));
    f = f_new;
    if (rel < spec.tolerance) {
      fit.converged = true;
      break;
    }
  }

  fit.objective = f;
  fit.samples = p.samples;
  for (std::size_t l = 1; l <= p.lags; ++l)
    fit.coefficients.push_back(b.block(static_cast<Index>(l - 1) * nn, 0, nn, nn).transpose());
  fit.precision = omega;
  fit.covariance = omega.inverse();
  fit.covariance = (0.5 * (fit.covariance + fit.covariance.transpose())).eval();
  {
    const std::size_t start = series.length() - p.samples;
    fit.residuals = series.values.bottomRows(static_cast<Index>(p.samples));
    for (std::size_t l = 1; l <= p.lags; ++l)
      fit.residuals -= series.values.middleRows(static_cast<Index>(start - l), static_cast<Index>(p.samples)) *
                       fit.coefficients[l - 1].transpose();
  }
  fit.loglik = gaussian_loglik(omega, s, p.samples);
  std::size_t k = static_cast<std::size_t>((b.array() != 0.0).count());
  for (Index r = 0; r < nn; ++r)
    for (Index col = r; col < nn; ++col) k += omega(r, col) != 0.0;
  fit.nonzero = k;
  fit.aic = 2.0 * static_cast<double>(k) - 2.0 * fit.loglik;
  return fit;
}

/// Penalty part of the objective recomputed from stored entries.
inline double penalty_value(const VarFit& fit, const VarSpec& spec) {
  double coef = 0.0;
  for (const auto& o : fit.coefficients) coef += o.cwiseAbs().sum();
  return spec.lambda_precision * detail::offdiag_l1(fit.precision) + spec.lambda_coefficient * coef;
}

/// Subtract each column's mean.
inline RiskSeries centered(RiskSeries s) {
  if (s.values.rows() > 0) s.values.rowwise() -= s.values.colwise().mean();
  return s;
}

}  // namespace graphshield::causality
