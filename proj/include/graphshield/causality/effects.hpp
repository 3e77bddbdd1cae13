#pragma once

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "graphshield/causality/var.hpp"
#include "graphshield/error.hpp"

namespace graphshield::causality {

/// Partial contemporaneous correlation -Omega_ij / sqrt(Omega_ii Omega_jj).
inline double pcc(const Matrix& precision, std::size_t i, std::size_t j) {
  if (i == j) throw std::invalid_argument("pcc: i and j must differ");
  const auto a = static_cast<Index>(i), b = static_cast<Index>(j);
  return -precision(a, b) / std::sqrt(precision(a, a) * precision(b, b));
}

inline double pcc(const VarFit& fit, std::size_t i, std::size_t j) { return pcc(fit.precision, i, j); }

/// Partial directed correlation of series j at `lag` on series i:
/// O_lag(i,j) / sqrt(z * Xi_ii) with
/// z = Omega_jj + sum_{d < lag} sum_{a,b} O_d(a,j) Omega_ab O_d(b,j).
inline double pdc(const std::vector<Matrix>& coefficients, const Matrix& precision, const Matrix& covariance,
                  std::size_t i, std::size_t j, std::size_t lag) {
  if (lag < 1 || lag > coefficients.size())
    throw std::out_of_range("pdc: lag " + std::to_string(lag) + " outside 1.." + std::to_string(coefficients.size()));
  const auto a = static_cast<Index>(i), b = static_cast<Index>(j);
  double z = precision(b, b);
  for (std::size_t d = 1; d < lag; ++d) {
    const Vector col = coefficients[d - 1].col(b);
    z += col.dot(precision * col);
  }
  return coefficients[lag - 1](a, b) / std::sqrt(z * covariance(a, a));
}

inline double pdc(const VarFit& fit, std::size_t i, std::size_t j, std::size_t lag) {
  return pdc(fit.coefficients, fit.precision, fit.covariance, i, j, lag);
}

/// Upper tail of the chi-square distribution with `dof` degrees of freedom.
inline double chi_square_upper_tail(double statistic, double dof) {
  if (!(dof > 0.0)) throw std::invalid_argument("chi_square_upper_tail: dof must be positive");
  if (statistic <= 0.0) return 1.0;
  return boost::math::gamma_q(0.5 * dof, 0.5 * statistic);
}

struct LrtResult {
  double statistic = 0.0;
  double p_value = 1.0;
  double loglik_full = 0.0;
  double loglik_reduced = 0.0;
};

inline LrtResult lrt_from_logliks(double loglik_full, double loglik_reduced, double dof = 1.0) {
  LrtResult r;
  r.loglik_full = loglik_full;
  r.loglik_reduced = loglik_reduced;
  r.statistic = -2.0 * (loglik_reduced - loglik_full);
  r.p_value = chi_square_upper_tail(r.statistic, dof);
  return r;
}

/// Refit `spec` with `target` forced to zero and compare against `full`.
inline LrtResult lrt_pvalue(const RiskSeries& series, const VarSpec& spec, const VarFit& full, const ForcedZero& target) {
  VarSpec reduced = spec;
  reduced.zeros.push_back(target);
  const VarFit fit = fit_var(series, reduced);
  return lrt_from_logliks(full.loglik, fit.loglik);
}

struct LagSelection {
  std::size_t lags = 1;
  std::vector<std::size_t> candidates;
  std::vector<double> aic;
};

/// Smallest-AIC lag over `candidates` (ties to the smaller lag), each fit on
/// the common sample that drops the largest candidate's leading rows.
inline LagSelection select_lag(const RiskSeries& series, const VarSpec& base, std::vector<std::size_t> candidates = {1, 2, 3}) {
  if (candidates.empty()) throw ConfigError("lags", "no candidate lag orders");
  std::sort(candidates.begin(), candidates.end());
  LagSelection sel;
  sel.candidates = candidates;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t lag : candidates) {
    VarSpec spec = base;
    spec.lags = lag;
    spec.sample_start = std::max(base.sample_start, candidates.back());
    if (spec.temporal_masks.size() > 1) spec.temporal_masks.resize(1);
    const double aic = fit_var(series, spec).aic;
    sel.aic.push_back(aic);
    if (aic < best) {
      best = aic;
      sel.lags = lag;
    }
  }
  return sel;
}

inline const std::vector<double>& default_penalty_grid() {
  static const std::vector<double> grid{1e-3, 1e-2, 1e-1, 1.0};
  return grid;
}

struct PenaltySelection {
  double lambda_precision = 0.0;
  double lambda_coefficient = 0.0;
  double aic = std::numeric_limits<double>::infinity();
};

/// Smallest-AIC (lambda_precision, lambda_coefficient) pair over grid x grid.
/// Earlier grid entries win ties.
inline PenaltySelection select_penalties(const RiskSeries& series, const VarSpec& base,
                                         const std::vector<double>& grid = default_penalty_grid()) {
  PenaltySelection best;
  for (double l1 : grid)
    for (double l2 : grid) {
      VarSpec spec = base;
      spec.lambda_precision = l1;
      spec.lambda_coefficient = l2;
      const double aic = fit_var(series, spec).aic;
      if (aic < best.aic) best = {l1, l2, aic};
    }
  return best;
}

struct Effect {
  enum class Kind { Spatial, Temporal };
  Kind kind = Kind::Temporal;
  std::size_t i = 0;   // affected series (temporal) / first series (spatial)
  std::size_t j = 0;   // source series (temporal) / second series (spatial)
  std::size_t lag = 0; // 0 for spatial
  double value = 0.0;  // PDC or PCC
  double statistic = 0.0;
  double p_value = 1.0;
};

struct EffectGraph {
  std::vector<graph::NodeId> nodes;
  std::vector<double> mean_risk;  // per node, for coloring
  std::vector<Effect> effects;    // retained only
  std::vector<Effect> tested;     // every tested candidate
};

/// Keep the tested effects with p < alpha.
inline std::vector<Effect> significant(const std::vector<Effect>& tested, double alpha) {
  std::vector<Effect> out;
  for (const auto& e : tested)
    if (e.p_value < alpha) out.push_back(e);
  return out;
}

/// Support of a penalized fit as an unpenalized spec: zero entries become masked.
inline VarSpec support_spec(const VarFit& fit, const VarSpec& spec) {
  VarSpec out = spec;
  out.lambda_precision = 0.0;
  out.lambda_coefficient = 0.0;
  out.zeros.clear();
  out.temporal_masks.clear();
  for (const auto& o : fit.coefficients) out.temporal_masks.push_back((o.array() != 0.0).cast<double>());
  out.spatial_mask = (fit.precision.array() != 0.0).cast<double>();
  return out;
}

/// Likelihood-ratio tests of every off-diagonal nonzero of the fitted support,
/// evaluated on the unpenalized refit; entries with p < alpha are retained.
inline EffectGraph effect_graph(const RiskSeries& series, const VarSpec& spec, const VarFit& penalized, double alpha = 0.05) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha", "must lie in (0, 1)");
  const VarSpec refit_spec = support_spec(penalized, spec);
  const VarFit full = fit_var(series, refit_spec);
  const std::size_t n = series.width();
  EffectGraph g;
  g.nodes = series.nodes;
  for (std::size_t j = 0; j < n; ++j) g.mean_risk.push_back(series.values.col(static_cast<Index>(j)).mean());
  for (std::size_t l = 1; l <= full.lags; ++l)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j || full.coefficient(l)(static_cast<Index>(i), static_cast<Index>(j)) == 0.0) continue;
        const auto r = lrt_pvalue(series, refit_spec, full, {ForcedZero::Kind::Coefficient, i, j, l});
        g.tested.push_back({Effect::Kind::Temporal, i, j, l, pdc(full, i, j, l), r.statistic, r.p_value});
      }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      if (full.precision(static_cast<Index>(i), static_cast<Index>(j)) == 0.0) continue;
      const auto r = lrt_pvalue(series, refit_spec, full, {ForcedZero::Kind::Precision, i, j, 0});
      g.tested.push_back({Effect::Kind::Spatial, i, j, 0, pcc(full, i, j), r.statistic, r.p_value});
    }
  g.effects = significant(g.tested, alpha);
  return g;
}

namespace detail {
inline std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}
inline std::string general(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}
}  // namespace detail

/// Directed DOT graph. Temporal edges point from source to affected node;
/// spatial edges are undirected. Nodes with mean risk >= 0.5 are filled red.
inline void write_dot(std::ostream& os, const EffectGraph& g) {
  os << "digraph effects {\n  node [shape=circle, style=filled];\n";
  for (std::size_t k = 0; k < g.nodes.size(); ++k) {
    const bool risky = k < g.mean_risk.size() && g.mean_risk[k] >= 0.5;
    os << "  \"" << g.nodes[k] << "\" [fillcolor=\"" << (risky ? "#e34a33" : "#d9d9d9") << "\"];\n";
  }
  for (const auto& e : g.effects) {
    if (e.kind == Effect::Kind::Temporal)
      os << "  \"" << g.nodes[e.j] << "\" -> \"" << g.nodes[e.i] << "\" [label=\"PDC=" << detail::fixed(e.value, 3)
         << " lag " << e.lag << " (p=" << detail::fixed(e.p_value, 4) << ")\"];\n";
    else
      os << "  \"" << g.nodes[e.i] << "\" -> \"" << g.nodes[e.j] << "\" [dir=none, style=dashed, label=\"PCC="
         << detail::fixed(e.value, 3) << " (p=" << detail::fixed(e.p_value, 4) << ")\"];\n";
  }
  os << "}\n";
}

/// Tab-separated table of retained effects.
inline void write_effects_table(std::ostream& os, const EffectGraph& g) {
  os << "i\tj\tlag\tkind\tvalue\tstatistic\tp\n";
  for (const auto& e : g.effects)
    os << g.nodes[e.i] << '\t' << g.nodes[e.j] << '\t' << e.lag << '\t'
       << (e.kind == Effect::Kind::Temporal ? "PDC" : "PCC") << '\t' << detail::general(e.value) << '\t'
       << detail::general(e.statistic) << '\t' << detail::general(e.p_value) << '\n';
}

/// Text dump of a fit: scalars, then each matrix as tab-separated rows.
inline void write_fit(std::ostream& os, const VarFit& fit) {
  auto matrix = [&](const std::string& name, const Matrix& m) {
    os << "# " << name << ' ' << m.rows() << 'x' << m.cols() << '\n';
    for (Index r = 0; r < m.rows(); ++r) {
      for (Index c = 0; c < m.cols(); ++c) os << (c ? "\t" : "") << detail::general(m(r, c));
      os << '\n';
    }
  };
  os << "lags\t" << fit.lags << "\nsamples\t" << fit.samples << "\nloglik\t" << detail::general(fit.loglik) << "\naic\t"
     << detail::general(fit.aic) << "\nnonzero\t" << fit.nonzero << "\niterations\t" << fit.iterations << "\nconverged\t"
     << (fit.converged ? 1 : 0) << "\neigen_floor_events\t" << fit.eigen_floor_events << '\n';
  for (std::size_t l = 1; l <= fit.lags; ++l) matrix("coefficients lag " + std::to_string(l), fit.coefficient(l));
  matrix("precision", fit.precision);
  matrix("covariance", fit.covariance);
}

}  // namespace graphshield::causality
