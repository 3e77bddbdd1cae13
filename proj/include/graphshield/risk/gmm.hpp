#pragma once

// Gaussian mixture statistics driven by network responsibilities. Component k
// has weight pi_k = W_k / N with W_k = sum_i gamma_ik, mean
// mu_k = sum_i gamma_ik z_i / W_k and covariance
// S_k = sum_i gamma_ik (z_i - mu_k)(z_i - mu_k)^T / W_k plus a diagonal jitter
// of c * trace(S_k) / d.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <numbers>
#include <span>
#include <vector>

#include "graphshield/error.hpp"
#include "graphshield/numeric/mat.hpp"
#include "graphshield/numeric/tape.hpp"

namespace graphshield::risk {

inline constexpr double kDefaultJitter = 1e-4;
inline constexpr double kMinComponentMass = 1e-12;

struct GmmStats {
  std::vector<double> weights;  // pi, K
  Mat means;                    // K x d
  std::vector<Mat> covariances; // K of d x d, jitter included
};

namespace detail {

using EMat = Eigen::MatrixXd;
using EVec = Eigen::VectorXd;

inline EMat to_eigen(const Mat& m) {
  EMat out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(i, j);
  return out;
}

inline Mat from_eigen(const EMat& m) {
  Mat out(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) = m(i, j);
  return out;
}

struct Component {
  double mass = 0.0;  // W_k
  EVec mean;
  EMat scatter;       // S_k without jitter
  EMat cov;           // with jitter
  Eigen::LLT<EMat> llt;
  double log_det = 0.0;
};

inline void check_inputs(const Mat& z, const Mat& gamma) {
  if (z.rows() != gamma.rows())
    throw ShapeError("gmm: embeddings " + z.shape_str() + " and responsibilities " + gamma.shape_str());
  if (z.rows() == 0) throw ShapeError("gmm: no samples");
}

inline std::vector<Component> components(const Mat& z, const Mat& gamma, double jitter) {
  check_inputs(z, gamma);
  const std::size_t n = z.rows(), d = z.cols(), kk = gamma.cols();
  std::vector<Component> out(kk);
  for (std::size_t k = 0; k < kk; ++k) {
    Component& c = out[k];
    c.mean = EVec::Zero(static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < n; ++i) {
      c.mass += gamma(i, k);
      for (std::size_t a = 0; a < d; ++a) c.mean[static_cast<Eigen::Index>(a)] += gamma(i, k) * z(i, a);
    }
    if (c.mass < kMinComponentMass)
      throw NumericError("gmm: component " + std::to_string(k) + " is degenerate (total responsibility " +
                         std::to_string(c.mass) + ")");
    c.mean /= c.mass;
    c.scatter = EMat::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    EVec r(static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t a = 0; a < d; ++a) r[static_cast<Eigen::Index>(a)] = z(i, a) - c.mean[static_cast<Eigen::Index>(a)];
      c.scatter.noalias() += gamma(i, k) * r * r.transpose();
    }
    c.scatter /= c.mass;
    c.scatter = (0.5 * (c.scatter + c.scatter.transpose())).eval();
    c.cov = c.scatter;
    c.cov.diagonal().array() += jitter * c.scatter.trace() / static_cast<double>(d);
    c.llt.compute(c.cov);
    if (c.llt.info() != Eigen::Success)
      throw NumericError("gmm: covariance of component " + std::to_string(k) + " is not positive definite after jitter");
    c.log_det = 2.0 * c.llt.matrixLLT().diagonal().array().log().sum();
  }
  return out;
}

}  // namespace detail

inline GmmStats gmm_moments(const Mat& z, const Mat& gamma, double jitter = kDefaultJitter) {
  const auto comps = detail::components(z, gamma, jitter);
  GmmStats s;
  s.means = Mat(comps.size(), z.cols());
  for (std::size_t k = 0; k < comps.size(); ++k) {
    s.weights.push_back(comps[k].mass / static_cast<double>(z.rows()));
    for (std::size_t a = 0; a < z.cols(); ++a) s.means(k, a) = comps[k].mean[static_cast<Eigen::Index>(a)];
    s.covariances.push_back(detail::from_eigen(comps[k].cov));
  }
  return s;
}

/// Multivariate normal log density via a Cholesky factorization.
inline double gaussian_logpdf(std::span<const double> z, std::span<const double> mean, const Mat& cov) {
  const std::size_t d = z.size();
  if (mean.size() != d || cov.rows() != d || cov.cols() != d)
    throw ShapeError("gaussian_logpdf: point of size " + std::to_string(d) + ", mean " + std::to_string(mean.size()) +
                     ", covariance " + cov.shape_str());
  Eigen::LLT<detail::EMat> llt(detail::to_eigen(cov));
  if (llt.info() != Eigen::Success) throw NumericError("gaussian_logpdf: covariance is not positive definite");
  detail::EVec r(static_cast<Eigen::Index>(d));
  for (std::size_t a = 0; a < d; ++a) r[static_cast<Eigen::Index>(a)] = z[a] - mean[a];
  const detail::EVec y = llt.matrixL().solve(r);
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  return -0.5 * (static_cast<double>(d) * std::log(2.0 * std::numbers::pi) + log_det + y.squaredNorm());
}

/// log(pi_k) + log N(z_i | mu_k, Sigma_k) for every sample and component
/// (N x K). Gradients flow into both the embeddings and the responsibilities
/// through the mixture statistics.
inline Var gmm_log_joint(Var z, Var gamma, double jitter = kDefaultJitter) {
  Tape& t = *z.tape;
  const Mat& zv = z.value();
  const Mat& gv = gamma.value();
  auto comps = std::make_shared<std::vector<detail::Component>>(detail::components(zv, gv, jitter));
  const std::size_t n = zv.rows(), d = zv.cols(), kk = gv.cols();
  const double log2pi = static_cast<double>(d) * std::log(2.0 * std::numbers::pi);
  Mat out(n, kk);
  detail::EVec r(static_cast<Eigen::Index>(d));
  for (std::size_t k = 0; k < kk; ++k) {
    const auto& c = (*comps)[k];
    const double log_pi = std::log(c.mass / static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t a = 0; a < d; ++a) r[static_cast<Eigen::Index>(a)] = zv(i, a) - c.mean[static_cast<Eigen::Index>(a)];
      const double quad = c.llt.matrixL().solve(r).squaredNorm();
      out(i, k) = log_pi - 0.5 * (log2pi + c.log_det + quad);
    }
  }
  const bool rg = t.requires_grad(z) || t.requires_grad(gamma);
  return t.record("gmm_log_joint", std::move(out), rg, [z, gamma, comps, jitter](Tape& tp, const Mat& g) {
    using detail::EMat;
    using detail::EVec;
    const Mat& zv2 = tp.value(z);
    const Mat& gv2 = tp.value(gamma);
    const std::size_t n2 = zv2.rows(), d2 = zv2.cols();
    const auto di = static_cast<Eigen::Index>(d2);
    Mat dz(n2, d2), dgamma(n2, gv2.cols());
    EMat rs(di, static_cast<Eigen::Index>(n2));  // residuals as columns
    for (std::size_t k = 0; k < comps->size(); ++k) {
      const auto& c = (*comps)[k];
      const double w_total = c.mass;
      for (std::size_t i = 0; i < n2; ++i)
        for (std::size_t a = 0; a < d2; ++a) rs(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(i)) = zv2(i, a) - c.mean[static_cast<Eigen::Index>(a)];
      const EMat prs = c.llt.solve(rs);  // P r_i
      const EMat precision = c.llt.solve(EMat::Identity(di, di));
      double gsum = 0.0;
      EMat weighted_outer = EMat::Zero(di, di);
      EVec grad_mean = EVec::Zero(di);
      for (std::size_t i = 0; i < n2; ++i) {
        const double gi = g(i, k);
        gsum += gi;
        weighted_outer.noalias() += gi * rs.col(static_cast<Eigen::Index>(i)) * rs.col(static_cast<Eigen::Index>(i)).transpose();
        grad_mean += gi * prs.col(static_cast<Eigen::Index>(i));
      }
      EMat grad_cov = -0.5 * gsum * precision + 0.5 * precision * weighted_outer * precision;
      EMat grad_scatter = grad_cov;
      grad_scatter.diagonal().array() += jitter * grad_cov.trace() / static_cast<double>(d2);
      const double grad_mass = gsum / w_total - (grad_scatter.cwiseProduct(c.scatter)).sum() / w_total;
      const EMat gs_r = grad_scatter * rs;
      for (std::size_t i = 0; i < n2; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        const double wi = gv2(i, k);
        dgamma(i, k) = grad_mass + rs.col(ii).dot(gs_r.col(ii)) / w_total + rs.col(ii).dot(grad_mean) / w_total;
        for (std::size_t a = 0; a < d2; ++a) {
          const auto ai = static_cast<Eigen::Index>(a);
          dz(i, a) += -g(i, k) * prs(ai, ii) + 2.0 * wi / w_total * gs_r(ai, ii) + wi / w_total * grad_mean[ai];
        }
      }
    }
    tp.accumulate(z, dz);
    tp.accumulate(gamma, dgamma);
  });
}

/// Mixture log density log sum_k pi_k N(z_i | mu_k, Sigma_k) per sample.
inline std::vector<double> mixture_log_density(const Mat& z, const GmmStats& stats) {
  std::vector<double> out(z.rows());
  std::vector<double> terms(stats.weights.size());
  for (std::size_t i = 0; i < z.rows(); ++i) {
    double hi = -INFINITY;
    for (std::size_t k = 0; k < terms.size(); ++k) {
      terms[k] = std::log(stats.weights[k]) + gaussian_logpdf(z.row(i), stats.means.row(k), stats.covariances[k]);
      hi = std::max(hi, terms[k]);
    }
    double s = 0.0;
    for (double v : terms) s += std::exp(v - hi);
    out[i] = hi + std::log(s);
  }
  return out;
}

}  // namespace graphshield::risk
