#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "graphshield/causality/effects.hpp"
#include "graphshield/causality/var.hpp"
#include "graphshield/pipeline/train.hpp"

namespace graphshield::pipeline {

/// Score a node carries before its first appearance.
inline constexpr double kInitialRisk = 0.5;

inline std::vector<RowScore> parse_scores(std::istream& in, const std::string& origin = "scores") {
  std::vector<RowScore> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("node_id", 0) == 0) continue;
    const auto cols = graph::detail::split(line, '\t');
    if (cols.size() != 4) throw DataError(origin + ": expected 4 tab-separated columns", lineno);
    RowScore r;
    if (!graph::detail::parse_number(cols[0], r.node) || !graph::detail::parse_number(cols[1], r.t) ||
        !graph::detail::parse_number(cols[2], r.risk) || !graph::detail::parse_number(cols[3], r.component) ||
        !std::isfinite(r.risk))
      throw DataError(origin + ": malformed score row '" + line + "'", lineno);
    out.push_back(r);
  }
  return out;
}

inline std::vector<RowScore> read_scores(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read scores file '" + path.string() + "'");
  return parse_scores(f, path.string());
}

struct SeriesBuild {
  causality::RiskSeries series;  // raw, uncentered, constant columns removed
  std::size_t first = 0;
  std::size_t last = 0;
  std::vector<graph::NodeId> requested;
  std::vector<graph::NodeId> constant;  // dropped
};

/// Nodes with the most active snapshots in [first, last]; ties go to the
/// higher mean score, then the lower id.
inline std::vector<graph::NodeId> most_active_nodes(const std::vector<RowScore>& scores, std::size_t first,
                                                    std::size_t last, std::size_t n) {
  std::map<graph::NodeId, std::pair<std::size_t, double>> stats;
  for (const auto& s : scores)
    if (s.t >= first && s.t <= last) {
      auto& x = stats[s.node];
      x.first += 1;
      x.second += s.risk;
    }
  std::vector<std::pair<graph::NodeId, std::pair<std::size_t, double>>> v(stats.begin(), stats.end());
  std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
    if (a.second.first != b.second.first) return a.second.first > b.second.first;
    const double ma = a.second.second / static_cast<double>(a.second.first);
    const double mb = b.second.second / static_cast<double>(b.second.first);
    return ma > mb;
  });
  std::vector<graph::NodeId> out;
  for (std::size_t k = 0; k < v.size() && k < n; ++k) out.push_back(v[k].first);
  return out;
}

/// T x n panel over snapshots first..last. A node's value at t is its score at
/// the latest snapshot <= t in which it was active, or kInitialRisk before that.
inline SeriesBuild build_series(const std::vector<RowScore>& scores, const CausalityConfig& cc) {
  if (scores.empty()) throw DataError("no risk scores to analyze");
  SeriesBuild b;
  std::size_t lo = scores.front().t, hi = scores.front().t;
  for (const auto& s : scores) lo = std::min(lo, s.t), hi = std::max(hi, s.t);
  b.first = cc.window_begin ? cc.window_begin : lo;
  b.last = cc.window_end ? cc.window_end : hi;
  if (b.first < lo || b.last > hi)
    throw ConfigError("causality.window", "outside the scored snapshots " + std::to_string(lo) + ":" + std::to_string(hi));
  b.requested = cc.nodes.empty() ? most_active_nodes(scores, b.first, b.last, cc.top_n) : cc.nodes;
  if (b.requested.size() < 2) throw DataError("analysis needs at least 2 nodes, found " + std::to_string(b.requested.size()));

  std::map<graph::NodeId, std::size_t> column;
  for (std::size_t j = 0; j < b.requested.size(); ++j)
    if (!column.emplace(b.requested[j], j).second)
      throw ConfigError("causality.nodes", "node " + std::to_string(b.requested[j]) + " listed twice");
  std::map<std::size_t, std::vector<const RowScore*>> by_t;
  std::map<graph::NodeId, bool> seen;
  for (const auto& s : scores)
    if (column.count(s.node) && s.t <= b.last) by_t[s.t].push_back(&s), seen[s.node] = true;
  for (auto id : b.requested)
    if (!seen.count(id)) throw DataError("node " + std::to_string(id) + " has no score up to snapshot " + std::to_string(b.last));

  const std::size_t T = b.last - b.first + 1;
  causality::Matrix full(static_cast<causality::Index>(T), static_cast<causality::Index>(b.requested.size()));
  std::vector<double> current(b.requested.size(), kInitialRisk);
  auto it = by_t.begin();
  for (std::size_t t = b.first; t <= b.last; ++t) {
    for (; it != by_t.end() && it->first <= t; ++it)
      for (const RowScore* s : it->second) current[column[s->node]] = s->risk;
    for (std::size_t j = 0; j < current.size(); ++j)
      full(static_cast<causality::Index>(t - b.first), static_cast<causality::Index>(j)) = current[j];
  }
  std::vector<causality::Index> keep;
  for (std::size_t j = 0; j < b.requested.size(); ++j) {
    const auto col = full.col(static_cast<causality::Index>(j));
    if ((col.array() == col(0)).all())
      b.constant.push_back(b.requested[j]);
    else
      keep.push_back(static_cast<causality::Index>(j));
  }
  b.series.values.resize(full.rows(), static_cast<causality::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    b.series.values.col(static_cast<causality::Index>(k)) = full.col(keep[k]);
    b.series.nodes.push_back(b.requested[static_cast<std::size_t>(keep[k])]);
  }
  return b;
}

/// Symmetric 0/1 support: an edge in either direction between two series
/// anywhere in [first, last] allows the pair; the diagonal is always allowed.
inline causality::Matrix graph_mask(const graph::DynamicGraph& g, const std::vector<graph::NodeId>& nodes,
                                    std::size_t first, std::size_t last) {
  const auto n = static_cast<causality::Index>(nodes.size());
  causality::Matrix m = causality::Matrix::Identity(n, n);
  std::map<graph::NodeId, causality::Index> col;
  for (causality::Index j = 0; j < n; ++j) col[nodes[static_cast<std::size_t>(j)]] = j;
  for (const auto& s : g.snapshots()) {
    if (s.index < first || s.index > last) continue;
    for (const auto& e : s.edges) {
      const auto a = col.find(e.src), b = col.find(e.dst);
      if (a == col.end() || b == col.end()) continue;
      m(a->second, b->second) = m(b->second, a->second) = 1.0;
    }
  }
  return m;
}

struct LagCandidate {
  std::size_t lags = 0;
  double aic = 0.0;
  double lambda_precision = 0.0;
  double lambda_coefficient = 0.0;
};

struct AnalysisResult {
  RunConfig config;
  std::string id;
  SeriesBuild build;
  std::vector<LagCandidate> candidates;
  std::optional<LagCandidate> selected;
  std::optional<causality::VarFit> fit;
  causality::EffectGraph effects;
};

/// Lag selection over the candidate lags (each with its AIC-best penalties,
/// all on a common sample), then the penalized fit and the tested effect graph.
/// Fewer than 2 varying series give an empty effect graph.
inline AnalysisResult analyze(const RunConfig& c, const std::vector<RowScore>& scores, const graph::DynamicGraph* g) {
  c.validate();
  AnalysisResult r;
  r.config = c;
  r.id = run_id(c);
  r.build = build_series(scores, c.causality);
  const auto& raw = r.build.series;
  r.effects.nodes = raw.nodes;
  for (causality::Index j = 0; j < raw.values.cols(); ++j) r.effects.mean_risk.push_back(raw.values.col(j).mean());
  if (raw.width() < 2) return r;

  const auto series = causality::centered(raw);
  causality::VarSpec base;
  base.objective = c.strict_paper ? causality::Objective::StrictPaper : causality::Objective::Gaussian;
  base.max_iterations = c.causality.max_iterations;
  base.tolerance = c.causality.tolerance;
  base.sample_start = *std::max_element(c.causality.lags.begin(), c.causality.lags.end());
  if (c.causality.masks == MaskSource::Graph) {
    if (!g) throw ConfigError("causality.masks", "graph masks need the dataset; set causality.masks = full to skip it");
    const auto m = graph_mask(*g, raw.nodes, r.build.first, r.build.last);
    base.temporal_masks = {m};
    base.spatial_mask = m;
  }
  auto lags = c.causality.lags;
  std::sort(lags.begin(), lags.end());
  lags.erase(std::unique(lags.begin(), lags.end()), lags.end());
  for (std::size_t lag : lags) {
    causality::VarSpec spec = base;
    spec.lags = lag;
    const auto p = causality::select_penalties(series, spec, c.causality.lambda_grid);
    r.candidates.push_back({lag, p.aic, p.lambda_precision, p.lambda_coefficient});
    if (!r.selected || p.aic < r.selected->aic) r.selected = r.candidates.back();
  }
  causality::VarSpec spec = base;
  spec.lags = r.selected->lags;
  spec.lambda_precision = r.selected->lambda_precision;
  spec.lambda_coefficient = r.selected->lambda_coefficient;
  r.fit = causality::fit_var(series, spec);
  r.effects = causality::effect_graph(series, spec, *r.fit, c.causality.alpha);
  // colour by the uncentered level
  r.effects.mean_risk.clear();
  for (causality::Index j = 0; j < raw.values.cols(); ++j) r.effects.mean_risk.push_back(raw.values.col(j).mean());
  return r;
}

inline std::string format_analysis_report(const AnalysisResult& r) {
  using detail::shortest;
  auto ids = [](const std::vector<graph::NodeId>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s.empty() ? std::string("-") : s;
  };
  std::ostringstream o;
  o << "graphshield analysis report\nrun_id " << r.id << "\n\n[config]\n" << format_config(r.config);
  o << "\n[series]\nwindow " << r.build.first << ":" << r.build.last << "\nlength " << r.build.series.length()
    << "\nrequested " << ids(r.build.requested) << "\nanalyzed " << ids(r.build.series.nodes) << "\nconstant "
    << ids(r.build.constant) << "\n";
  o << "\n[lag_selection]\nlags\taic\tlambda_precision\tlambda_coefficient\n";
  for (const auto& c : r.candidates)
    o << c.lags << '\t' << shortest(c.aic) << '\t' << shortest(c.lambda_precision) << '\t'
      << shortest(c.lambda_coefficient) << '\n';
  o << "selected_lag " << (r.selected ? std::to_string(r.selected->lags) : std::string("none")) << "\n";
  o << "\n[effects]\ntested " << r.effects.tested.size() << "\nretained " << r.effects.effects.size() << "\n";
  causality::write_effects_table(o, r.effects);
  return o.str();
}

inline constexpr const char* kAnalysisReportFile = "analysis.txt";
inline constexpr const char* kEffectsDotFile = "effects.dot";
inline constexpr const char* kEffectsTableFile = "effects.tsv";
inline constexpr const char* kFitFile = "var_fit.txt";

inline void write_analysis_outputs(const AnalysisResult& r, const std::filesystem::path& dir) {
  detail::ensure_dir(dir);
  detail::write_text(dir / kAnalysisReportFile, format_analysis_report(r));
  std::ostringstream dot, table, fit;
  causality::write_dot(dot, r.effects);
  causality::write_effects_table(table, r.effects);
  detail::write_text(dir / kEffectsDotFile, dot.str());
  detail::write_text(dir / kEffectsTableFile, table.str());
  if (r.fit) {
    causality::write_fit(fit, *r.fit);
    detail::write_text(dir / kFitFile, fit.str());
  }
}

}  // namespace graphshield::pipeline
