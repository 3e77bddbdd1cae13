#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "graphshield/encoder/layout.hpp"
#include "graphshield/encoder/model.hpp"
#include "graphshield/encoder/reconstruction.hpp"
#include "graphshield/error.hpp"
#include "graphshield/graph/labels.hpp"
#include "graphshield/numeric/adam.hpp"
#include "graphshield/numeric/checkpoint.hpp"
#include "graphshield/pipeline/config.hpp"
#include "graphshield/pipeline/dataset.hpp"
#include "graphshield/risk/head.hpp"
#include "graphshield/risk/loss.hpp"
#include "graphshield/risk/metrics.hpp"

namespace graphshield::pipeline {

struct LossPoint {
  std::size_t epoch = 0;  // number of updates applied before this evaluation
  double total = 0.0;
  double unlabeled = 0.0;
  double labeled = 0.0;
  double reconstruction = 0.0;
  std::size_t clamped = 0;
};

struct TimestampAuc {
  std::size_t t = 0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  std::optional<double> auc;  // empty when only one class is present
};

struct RowScore {
  graph::NodeId node = 0;
  std::size_t t = 0;
  double risk = 0.0;
  std::size_t component = 0;
};

struct CvFold {
  std::size_t fold = 0;
  std::size_t train_end = 0;
  std::size_t valid_end = 0;
  double auc = std::numeric_limits<double>::quiet_NaN();
};

/// Fold k (1-based) of a rolling split over `train_steps` snapshots: train on
/// 1..k*b and validate on the next b, with b = train_steps / (folds + 1).
inline std::vector<std::pair<std::size_t, std::size_t>> rolling_folds(std::size_t train_steps, std::size_t folds) {
  if (folds == 0) throw ConfigError("cv.folds", "must be positive");
  const std::size_t block = train_steps / (folds + 1);
  if (block == 0)
    throw ConfigError("cv.folds", std::to_string(folds) + " folds need at least " + std::to_string(folds + 1) +
                                      " training snapshots, got " + std::to_string(train_steps));
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t k = 1; k <= folds; ++k) out.emplace_back(k * block, (k + 1) * block);
  return out;
}

/// Parameters plus what evaluation needs to reuse them.
struct Model {
  ParamStore params;
  std::vector<graph::TypeId> slots;
  std::vector<std::size_t> risky_components;
};

inline encoder::EncoderConfig encoder_config(const RunConfig& c) {
  encoder::EncoderConfig e = c.encoder;
  e.input_dim = graph::kFeatureDim;
  return e;
}

inline risk::LossOptions loss_options(const RunConfig& c) {
  risk::LossOptions o;
  o.tau3 = c.tau3;
  o.include_unlabeled = c.ablation == Ablation::Full;
  return o;
}

inline Model initial_model(const RunConfig& c, const std::vector<graph::TypeId>& slots) {
  Model m;
  m.slots = slots;
  Rng rng = Rng::stream(c.seed, 1);
  encoder::init_encoder(m.params, encoder_config(c), slots.size(), rng);
  risk::init_head(m.params, c.head, c.encoder.dim, rng);
  return m;
}

inline std::vector<graph::Label> row_labels(const graph::DynamicGraph& g, const graph::LabelSet& labels) {
  std::vector<graph::Label> out;
  out.reserve(g.total_rows());
  for (const auto& s : g.snapshots()) {
    const auto& l = labels.at(s.index);
    out.insert(out.end(), l.begin(), l.end());
  }
  return out;
}

/// Full-batch training on `train_graph` (standardized): one Adam step per
/// epoch. The loss is recorded before every step and once after the last.
inline std::vector<LossPoint> fit_model(Model& m, const RunConfig& c, const graph::DynamicGraph& train_graph,
                                        const graph::LabelSet& observed, std::size_t epochs) {
  const auto ecfg = encoder_config(c);
  const auto lay = encoder::build_layout(train_graph, m.slots);
  if (lay.rows() < 2) throw DataError("training span has fewer than 2 node rows");
  const Mat features = encoder::stack_features(train_graph);
  const auto labels = row_labels(train_graph, observed);
  const auto opt = loss_options(c);
  AdamOptions adam;
  adam.lr = c.lr;

  std::vector<LossPoint> curve;
  for (std::size_t e = 0; e <= epochs; ++e) {
    const bool step = e < epochs;
    Rng sampler = Rng::stream(c.seed, 1000 + e);
    const auto plan = encoder::plan_reconstruction(train_graph, lay, ecfg, sampler);
    Tape t;
    Var z = encoder::encode(t, m.params, ecfg, lay, features);
    Var gamma = risk::responsibilities(t, m.params, c.head, z, risk::Mode::Train, step);
    const auto designated = risk::designate_risk_components(gamma.value(), labels);
    const auto targets = risk::labeled_targets(gamma.value(), labels, designated);
    Var rec = encoder::reconstruction_loss(z, plan);
    const auto terms = risk::semi_supervised_loss(z, gamma, targets, rec, opt);
    const double total = terms.total.value()[0];
    if (!std::isfinite(total)) throw NumericError("training loss became non-finite at epoch " + std::to_string(e));
    curve.push_back({e, total, terms.unlabeled, terms.labeled, terms.reconstruction, terms.clamped});
    if (step) {
      m.params.zero_grad();
      t.backward(terms.total);
      adam_step(m.params, adam);
    } else {
      m.risky_components = risk::risky_indices(designated);
    }
  }
  return curve;
}

/// Eval-mode responsibilities for every row of `g` in layout order.
inline Mat infer(Model& m, const RunConfig& c, const graph::DynamicGraph& g) {
  const auto lay = encoder::build_layout(g, m.slots);
  const Mat z = encoder::encode(m.params, encoder_config(c), lay, encoder::stack_features(g));
  return risk::responsibilities(m.params, c.head, z);
}

inline std::vector<RowScore> score_rows(const graph::DynamicGraph& g, const Mat& gamma,
                                        const std::vector<std::size_t>& risky_components) {
  const auto risk = risk::risk_score(gamma, risky_components);
  std::vector<RowScore> out;
  std::size_t r = 0;
  for (const auto& s : g.snapshots())
    for (graph::NodeId id : s.active) {
      const auto row = gamma.row(r);
      const auto best = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
      out.push_back({id, s.index, risk[r], best});
      ++r;
    }
  return out;
}

/// Per-snapshot AUC over snapshots first..last against ground truth.
inline std::vector<TimestampAuc> timestamp_aucs(const graph::DynamicGraph& g, const std::vector<RowScore>& scores,
                                                const graph::LabelSet& truth, std::size_t first, std::size_t last) {
  std::vector<TimestampAuc> out;
  std::size_t r = 0;
  for (const auto& s : g.snapshots()) {
    const std::size_t n = s.active.size();
    if (s.index >= first && s.index <= last) {
      TimestampAuc a;
      a.t = s.index;
      std::vector<double> sc;
      std::vector<bool> pos;
      const auto& lab = truth.at(s.index);
      for (std::size_t i = 0; i < n; ++i) {
        sc.push_back(scores[r + i].risk);
        pos.push_back(lab[i] == graph::Label::Risky);
        (pos.back() ? a.positives : a.negatives) += 1;
      }
      if (a.positives && a.negatives) a.auc = risk::auc(sc, pos);
      out.push_back(a);
    }
    r += n;
  }
  return out;
}

inline double mean_auc(const std::vector<TimestampAuc>& v) {
  double s = 0.0;
  std::size_t k = 0;
  for (const auto& a : v)
    if (a.auc) {
      s += *a.auc;
      ++k;
    }
  return k ? s / static_cast<double>(k) : std::numeric_limits<double>::quiet_NaN();
}

/// Train on the first `train_steps` snapshots of `raw` and score every snapshot.
struct SplitRun {
  Model model;
  graph::DynamicGraph graph;  // standardized
  std::vector<LossPoint> loss;
  std::vector<RowScore> scores;
  graph::LabelSet truth;
  std::size_t train_rows = 0;
};

inline SplitRun run_split(const RunConfig& c, const graph::DynamicGraph& raw, std::size_t train_steps, std::size_t epochs) {
  SplitRun out;
  out.graph = graph::standardize_features(raw, train_steps);
  out.truth = graph::derive_labels(out.graph, c.risk_ratio, 0.0, c.seed);
  const auto observed = graph::derive_labels(out.graph, c.risk_ratio, c.unlabeled_ratio, c.seed);
  const auto train_graph = train_steps < out.graph.size() ? graph::train_test_split(out.graph, train_steps).first : out.graph;
  out.train_rows = train_graph.total_rows();
  out.model = initial_model(c, encoder::type_slots(out.graph));
  out.loss = fit_model(out.model, c, train_graph, graph::restrict_labels(observed, train_graph), epochs);
  out.scores = score_rows(out.graph, infer(out.model, c, out.graph), out.model.risky_components);
  return out;
}

inline std::vector<CvFold> cross_validate(const RunConfig& c, const graph::DynamicGraph& raw, std::size_t train_steps,
                                          std::size_t epochs) {
  std::vector<CvFold> out;
  std::size_t k = 0;
  for (const auto& [train_end, valid_end] : rolling_folds(train_steps, c.cv_folds)) {
    const auto sub = graph::train_test_split(raw, valid_end).first;
    const auto run = run_split(c, sub, train_end, epochs);
    const auto aucs = timestamp_aucs(run.graph, run.scores, run.truth, train_end + 1, valid_end);
    out.push_back({++k, train_end, valid_end, mean_auc(aucs)});
  }
  return out;
}

struct TrainResult {
  RunConfig config;
  std::string id;
  std::size_t snapshots = 0;
  std::size_t train_steps = 0;
  std::size_t epochs = 0;
  std::size_t rows = 0;
  std::size_t train_rows = 0;
  std::size_t nodes = 0;
  std::size_t edges = 0;
  std::vector<LossPoint> loss;
  std::vector<TimestampAuc> aucs;
  double mean_test_auc = 0.0;
  std::vector<CvFold> cv;
  std::vector<RowScore> scores;
  Model model;
  double seconds = 0.0;
};

inline TrainResult train(const RunConfig& c, const Dataset& data) {
  c.validate();
  const auto started = std::chrono::steady_clock::now();
  TrainResult r;
  r.config = c;
  r.id = run_id(c);
  r.snapshots = data.graph.size();
  r.train_steps = resolved_train_steps(c, r.snapshots);
  r.epochs = resolved_epochs(c);
  r.rows = data.graph.total_rows();
  r.nodes = data.graph.registry().size();
  r.edges = data.graph.total_edges();
  auto run = run_split(c, data.graph, r.train_steps, r.epochs);
  r.train_rows = run.train_rows;
  r.loss = std::move(run.loss);
  r.aucs = timestamp_aucs(run.graph, run.scores, run.truth, r.train_steps + 1, run.graph.last_index());
  r.mean_test_auc = mean_auc(r.aucs);
  if (std::isnan(r.mean_test_auc))
    throw DataError("no test snapshot contains both risky and safe nodes; AUC is undefined");
  r.scores = std::move(run.scores);
  r.model = std::move(run.model);
  if (c.cv_folds) r.cv = cross_validate(c, data.graph, r.train_steps, r.epochs);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return r;
}

inline TrainResult train(const RunConfig& c) {
  c.validate();
  return train(c, load_dataset(c));
}

/// Deterministic text report: config echo, data shape, loss curve, AUCs.
inline std::string format_report(const TrainResult& r) {
  using detail::shortest;
  std::ostringstream o;
  o << "graphshield train report\n";
  o << "run_id " << r.id << "\n\n[config]\n" << format_config(r.config);
  o << "\n[data]\n";
  o << "snapshots " << r.snapshots << "\ntrain_steps " << r.train_steps << "\ntest_steps " << r.snapshots - r.train_steps
    << "\nnodes " << r.nodes << "\nedges " << r.edges << "\nrows " << r.rows << "\ntrain_rows " << r.train_rows
    << "\nepochs " << r.epochs << "\n";
  o << "\n[loss]\nepoch\ttotal\tunlabeled\tlabeled\treconstruction\tclamped\n";
  for (const auto& p : r.loss)
    o << p.epoch << '\t' << shortest(p.total) << '\t' << shortest(p.unlabeled) << '\t' << shortest(p.labeled) << '\t'
      << shortest(p.reconstruction) << '\t' << p.clamped << '\n';
  o << "\n[risk_components]\n";
  for (std::size_t i = 0; i < r.model.risky_components.size(); ++i) o << (i ? "," : "") << r.model.risky_components[i];
  o << "\n\n[auc]\nt\tauc\tpositives\tnegatives\n";
  for (const auto& a : r.aucs)
    o << a.t << '\t' << (a.auc ? shortest(*a.auc) : std::string("skipped")) << '\t' << a.positives << '\t'
      << a.negatives << '\n';
  o << "\nmean_test_auc " << shortest(r.mean_test_auc) << "\n";
  if (!r.cv.empty()) {
    o << "\n[cv]\nfold\ttrain_end\tvalid_end\tauc\n";
    double s = 0.0;
    std::size_t k = 0;
    for (const auto& f : r.cv) {
      o << f.fold << '\t' << f.train_end << '\t' << f.valid_end << '\t' << shortest(f.auc) << '\n';
      if (!std::isnan(f.auc)) s += f.auc, ++k;
    }
    o << "mean_cv_auc " << shortest(k ? s / static_cast<double>(k) : std::numeric_limits<double>::quiet_NaN()) << "\n";
  }
  return o.str();
}

inline void write_scores(std::ostream& o, const std::vector<RowScore>& scores) {
  o << "node_id\tt\trisk_probability\targmax_component\n";
  for (const auto& s : scores) o << s.node << '\t' << s.t << '\t' << detail::shortest(s.risk) << '\t' << s.component << '\n';
}

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write '" + path.string() + "'");
  f << text;
  if (!f) throw DataError("write failed for '" + path.string() + "'");
}

inline void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory '" + dir.string() + "': " + ec.message());
}

}  // namespace detail

inline constexpr const char* kReportFile = "metrics.txt";
inline constexpr const char* kScoresFile = "scores.tsv";
inline constexpr const char* kCheckpointFile = "checkpoint.bin";
inline constexpr const char* kTimingFile = "timing.txt";

inline constexpr const char* kDesignationTensor = "risk.designation";

/// Parameters plus a 1 x K row marking the risky components.
inline std::vector<NamedTensor> checkpoint_tensors(const Model& m, std::size_t components) {
  auto out = snapshot_params(m.params);
  Mat mark(1, components);
  for (std::size_t k : m.risky_components) mark(0, k) = 1.0;
  out.push_back({kDesignationTensor, mark});
  return out;
}

/// Rebuild a trained model from checkpoint tensors for graph `g`.
inline Model load_model(const RunConfig& c, const graph::DynamicGraph& g, const std::vector<NamedTensor>& tensors) {
  Model m = initial_model(c, encoder::type_slots(g));
  load_params(m.params, tensors);
  const auto it = std::find_if(tensors.begin(), tensors.end(), [](const NamedTensor& t) { return t.name == kDesignationTensor; });
  if (it == tensors.end()) throw DataError("checkpoint: missing tensor " + std::string(kDesignationTensor));
  if (it->value.rows() != 1 || it->value.cols() != c.head.components)
    throw ShapeError("checkpoint: designation row does not match head.components");
  for (std::size_t k = 0; k < c.head.components; ++k)
    if (it->value(0, k) != 0.0) m.risky_components.push_back(k);
  return m;
}

/// metrics.txt, scores.tsv, checkpoint.bin and timing.txt under `dir`.
inline void write_outputs(const TrainResult& r, const std::filesystem::path& dir) {
  detail::ensure_dir(dir);
  detail::write_text(dir / kReportFile, format_report(r));
  std::ostringstream scores;
  write_scores(scores, r.scores);
  detail::write_text(dir / kScoresFile, scores.str());
  write_checkpoint((dir / kCheckpointFile).string(), checkpoint_tensors(r.model, r.config.head.components));
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", r.seconds);
  detail::write_text(dir / kTimingFile, "run_id " + r.id + "\nseconds " + buf + "\n");
}

}  // namespace graphshield::pipeline
