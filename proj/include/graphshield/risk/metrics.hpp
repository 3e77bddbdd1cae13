#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <vector>

#include "graphshield/error.hpp"
#include "graphshield/numeric/mat.hpp"

namespace graphshield::risk {

/// Sum of responsibilities over the risky components (0-based indices).
inline std::vector<double> risk_score(const Mat& gamma, const std::vector<std::size_t>& risky_components) {
  if (risky_components.empty()) throw ConfigError("risk_components", "at least one risky component required");
  for (std::size_t k : risky_components)
    if (k >= gamma.cols())
      throw ConfigError("risk_components", "component " + std::to_string(k) + " outside 0.." + std::to_string(gamma.cols() - 1));
  std::vector<double> out(gamma.rows(), 0.0);
  for (std::size_t i = 0; i < gamma.rows(); ++i)
    for (std::size_t k : risky_components) out[i] += gamma(i, k);
  return out;
}

inline std::vector<std::size_t> risky_indices(const std::vector<bool>& risky) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < risky.size(); ++k)
    if (risky[k]) out.push_back(k);
  return out;
}

/// Area under the ROC curve via the Mann-Whitney statistic with average ranks
/// for ties.
inline double auc(const std::vector<double>& scores, const std::vector<bool>& positive) {
  if (scores.size() != positive.size()) throw ShapeError("auc: scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double pos_rank_sum = 0.0;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k)
      if (positive[order[k]]) {
        pos_rank_sum += avg_rank;
        ++pos;
      }
    i = j;
  }
  const std::size_t neg = n - pos;
  if (pos == 0 || neg == 0) throw DataError("auc: need both classes, got " + std::to_string(pos) + " positive and " +
                                            std::to_string(neg) + " negative");
  const double p = static_cast<double>(pos);
  return (pos_rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

}  // namespace graphshield::risk
