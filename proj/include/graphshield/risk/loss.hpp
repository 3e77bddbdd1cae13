#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "graphshield/error.hpp"
#include "graphshield/graph/labels.hpp"
#include "graphshield/numeric/ops.hpp"
#include "graphshield/numeric/tape.hpp"
#include "graphshield/risk/gmm.hpp"

namespace graphshield::risk {

/// A labeled row and the mixture component its label maps to.
struct LabeledRow {
  std::size_t row = 0;
  std::size_t component = 0;
};

struct LossOptions {
  double tau3 = 0.9;
  /// Drop the unlabeled mixture-likelihood term (supervised ablation).
  bool include_unlabeled = true;
  double jitter = kDefaultJitter;
  double log_floor = 1e-12;

  void validate() const {
    if (!(tau3 >= 0.0 && tau3 <= 1.0)) throw ConfigError("tau3", "must lie in [0, 1]");
    if (!(log_floor > 0.0)) throw ConfigError("log_floor", "must be positive");
  }
};

struct LossTerms {
  Var total;
  double unlabeled = 0.0;       // C_unlabel, weighted
  double labeled = 0.0;         // C_label, weighted
  double reconstruction = 0.0;
  std::size_t clamped = 0;      // labeled responsibilities raised to the floor
};

/// Which components count as risky. With K = 2 component 1 is risky. With more
/// components a component is risky when most labeled rows whose largest
/// responsibility falls on it are Risky (ties risky, no members safe). If that
/// leaves one side empty, the component with the highest (lowest) risky share
/// is moved across.
inline std::vector<bool> designate_risk_components(const Mat& gamma, const std::vector<graph::Label>& row_labels) {
  const std::size_t kk = gamma.cols();
  if (kk == 2) return {false, true};
  if (row_labels.size() != gamma.rows()) throw ShapeError("designate_risk_components: one label per row required");
  std::vector<std::size_t> risky(kk, 0), safe(kk, 0);
  for (std::size_t i = 0; i < gamma.rows(); ++i) {
    if (row_labels[i] == graph::Label::Unlabeled) continue;
    const auto row = gamma.row(i);
    const auto k = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    (row_labels[i] == graph::Label::Risky ? risky : safe)[k] += 1;
  }
  std::vector<bool> out(kk);
  for (std::size_t k = 0; k < kk; ++k) out[k] = risky[k] + safe[k] > 0 && risky[k] >= safe[k];
  // keep at least one component on each side, chosen by risky share
  auto share = [&](std::size_t k) {
    const std::size_t n = risky[k] + safe[k];
    return n ? static_cast<double>(risky[k]) / static_cast<double>(n) : 0.0;
  };
  const auto count = static_cast<std::size_t>(std::count(out.begin(), out.end(), true));
  if (count == 0) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < kk; ++k)
      if (share(k) > share(best)) best = k;
    out[best] = true;
  } else if (count == kk) {
    std::size_t worst = 0;
    for (std::size_t k = 1; k < kk; ++k)
      if (share(k) < share(worst)) worst = k;
    out[worst] = false;
  }
  return out;
}

/// Target component per labeled row: the component of the label's class with
/// the largest responsibility (the single matching component when K = 2).
inline std::vector<LabeledRow> labeled_targets(const Mat& gamma, const std::vector<graph::Label>& row_labels,
                                               const std::vector<bool>& risky) {
  if (row_labels.size() != gamma.rows()) throw ShapeError("labeled_targets: one label per row required");
  std::vector<LabeledRow> out;
  for (std::size_t i = 0; i < gamma.rows(); ++i) {
    if (row_labels[i] == graph::Label::Unlabeled) continue;
    const bool want_risky = row_labels[i] == graph::Label::Risky;
    std::optional<std::size_t> best;
    for (std::size_t k = 0; k < gamma.cols(); ++k)
      if (risky[k] == want_risky && (!best || gamma(i, k) > gamma(i, *best))) best = k;
    if (!best) {
      const auto row = gamma.row(i);
      best = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    out.push_back({i, *best});
  }
  return out;
}

/// sum over labeled rows of log(max(gamma[row, component], floor)).
inline Var labeled_log_likelihood(Var gamma, const std::vector<LabeledRow>& rows, double floor, std::size_t* clamped) {
  Tape& t = *gamma.tape;
  const Mat& gv = gamma.value();
  double s = 0.0;
  std::size_t low = 0;
  for (const auto& r : rows) {
    if (r.row >= gv.rows() || r.component >= gv.cols()) throw ShapeError("labeled_log_likelihood: index out of range");
    const double p = gv(r.row, r.component);
    if (p < floor) ++low;
    s += std::log(std::max(p, floor));
  }
  if (clamped) *clamped = low;
  return t.record("labeled_log_likelihood", Mat::scalar(s), t.requires_grad(gamma), [gamma, rows, floor](Tape& tp, const Mat& g) {
    const Mat& gv2 = tp.value(gamma);
    Mat d(gv2.rows(), gv2.cols());
    for (const auto& r : rows) {
      const double p = gv2(r.row, r.component);
      if (p >= floor) d(r.row, r.component) += g[0] / p;
    }
    tp.accumulate(gamma, d);
  });
}

/// -(1 - tau3)/N sum_i log sum_k pi_k N(z_i) - tau3 sum_labeled log gamma + c_rec.
inline LossTerms semi_supervised_loss(Var z, Var gamma, const std::vector<LabeledRow>& labeled,
                                      std::optional<Var> c_rec, const LossOptions& opt) {
  opt.validate();
  Tape& t = *z.tape;
  if (opt.tau3 > 0.0 && labeled.empty()) throw ConfigError("labels", "no labeled rows while tau3 > 0");
  LossTerms out;
  std::vector<Var> parts;
  if (opt.include_unlabeled && opt.tau3 < 1.0) {
    const double n = static_cast<double>(z.value().rows());
    Var term = ops::scale(ops::sum(ops::rowwise_logsumexp(gmm_log_joint(z, gamma, opt.jitter))), -(1.0 - opt.tau3) / n);
    out.unlabeled = term.scalar();
    parts.push_back(term);
  }
  if (opt.tau3 > 0.0) {
    Var term = ops::scale(labeled_log_likelihood(gamma, labeled, opt.log_floor, &out.clamped), -opt.tau3);
    out.labeled = term.scalar();
    parts.push_back(term);
  }
  if (c_rec) {
    out.reconstruction = c_rec->scalar();
    parts.push_back(*c_rec);
  }
  if (parts.empty()) {
    out.total = t.constant(Mat::scalar(0.0));
    return out;
  }
  out.total = parts[0];
  for (std::size_t i = 1; i < parts.size(); ++i) out.total = ops::add(out.total, parts[i]);
  return out;
}

}  // namespace graphshield::risk
