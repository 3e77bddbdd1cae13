#pragma once

// Brute-force Gaussian mixture moments and densities. Test-only.

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "graphshield/numeric/mat.hpp"
#include "graphshield/numeric/rng.hpp"

namespace graphshield::testing {

inline Mat random_gamma(std::size_t n, std::size_t k, Rng& rng) {
  Mat g(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) s += g(i, j) = 0.05 + rng.uniform();
    for (std::size_t j = 0; j < k; ++j) g(i, j) /= s;
  }
  return g;
}

// 3x3 determinant and inverse by cofactors.
inline double det3(const Mat& a) {
  return a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
         a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
}

inline Mat inv3(const Mat& a) {
  const double d = det3(a);
  Mat o(3, 3);
  o(0, 0) = (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) / d;
  o(0, 1) = (a(0, 2) * a(2, 1) - a(0, 1) * a(2, 2)) / d;
  o(0, 2) = (a(0, 1) * a(1, 2) - a(0, 2) * a(1, 1)) / d;
  o(1, 0) = (a(1, 2) * a(2, 0) - a(1, 0) * a(2, 2)) / d;
  o(1, 1) = (a(0, 0) * a(2, 2) - a(0, 2) * a(2, 0)) / d;
  o(1, 2) = (a(0, 2) * a(1, 0) - a(0, 0) * a(1, 2)) / d;
  o(2, 0) = (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0)) / d;
  o(2, 1) = (a(0, 1) * a(2, 0) - a(0, 0) * a(2, 1)) / d;
  o(2, 2) = (a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0)) / d;
  return o;
}

inline double density3(std::span<const double> z, const std::vector<double>& mu, const Mat& cov) {
  const Mat p = inv3(cov);
  double q = 0.0;
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = 0; b < 3; ++b) q += (z[a] - mu[a]) * p(a, b) * (z[b] - mu[b]);
  return std::exp(-0.5 * q) / std::sqrt(std::pow(2.0 * std::numbers::pi, 3) * det3(cov));
}

// Brute-force moments: weighted sums written out per component.
struct Moments {
  std::vector<double> pi;
  std::vector<std::vector<double>> mu;
  std::vector<Mat> cov;
};

inline Moments brute_moments(const Mat& z, const Mat& gamma, double jitter) {
  Moments m;
  const std::size_t n = z.rows(), d = z.cols();
  for (std::size_t k = 0; k < gamma.cols(); ++k) {
    double w = 0.0;
    std::vector<double> mu(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) w += gamma(i, k);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t a = 0; a < d; ++a) mu[a] += gamma(i, k) * z(i, a) / w;
    Mat c(d, d);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b) c(a, b) += gamma(i, k) * (z(i, a) - mu[a]) * (z(i, b) - mu[b]) / w;
    double tr = 0.0;
    for (std::size_t a = 0; a < d; ++a) tr += c(a, a);
    for (std::size_t a = 0; a < d; ++a) c(a, a) += jitter * tr / static_cast<double>(d);
    m.pi.push_back(w / static_cast<double>(n));
    m.mu.push_back(mu);
    m.cov.push_back(c);
  }
  return m;
}

}  // namespace graphshield::testing
