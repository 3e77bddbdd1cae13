#pragma once

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "graphshield/graph/manifest.hpp"
#include "graphshield/graph/synthetic.hpp"
#include "graphshield/pipeline/analyze.hpp"
#include "graphshield/pipeline/config.hpp"
#include "graphshield/pipeline/dataset.hpp"
#include "graphshield/pipeline/report.hpp"
#include "graphshield/pipeline/sweep.hpp"
#include "graphshield/pipeline/train.hpp"

namespace graphshield::pipeline {

enum ExitCode : int { kOk = 0, kInternal = 1, kUsage = 2, kConfig = 3, kData = 4, kNumeric = 5 };

namespace detail {

inline std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"' || ch == '\\') out += '\\';
    if (ch == '\n') {
      out += "\\n";
      continue;
    }
    out += ch;
  }
  return out + "\"";
}

inline int report_error(std::ostream& err, const char* kind, const std::string& field, const std::string& message, int code) {
  err << "error: kind=" << kind << " field=" << (field.empty() ? "-" : field) << " message=" << quoted(message) << '\n';
  return code;
}

struct Options {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::string> seed, risk_ratio, unlabeled_ratio, epochs, ablation;
  bool strict_paper = false;
  std::size_t jobs = 1;
  std::string out = "graphshield-out";
  // analyze
  std::string checkpoint, scores, nodes, window;
  // sweep
  std::optional<std::string> risk_ratios, unlabeled_ratios, seeds;
  bool with_ablation = false;
};

inline void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config_path, "key = value configuration file");
  sub->add_option("--set", o.sets, "override one key, e.g. --set encoder.dim=32 (repeatable)");
  sub->add_option("--seed", o.seed, "random seed");
  sub->add_option("--risk-ratio", o.risk_ratio, "fraction of active nodes labeled risky");
  sub->add_option("--unlabeled-ratio", o.unlabeled_ratio, "fraction of nodes with hidden labels");
  sub->add_option("--epochs", o.epochs, "training epochs (default 200 for Bitcoin sets, 300 otherwise)");
  sub->add_option("--jobs", o.jobs, "parallel runs for sweep");
  sub->add_option("--out", o.out, "output directory");
  sub->add_option("--ablation", o.ablation, "full | supervised (drop the unlabeled mixture term)");
  sub->add_flag("--strict-paper", o.strict_paper, "use the n/2 log-determinant VAR objective");
}

/// Config file, then --set overrides, then dedicated flags.
inline RunConfig resolve_config(const Options& o) {
  RunConfig c;
  if (!o.config_path.empty()) apply_config_file(c, o.config_path);
  for (const auto& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("set", "expected KEY=VALUE, got '" + kv + "'");
    set_value(c, trimmed(std::string_view(kv).substr(0, eq)), trimmed(std::string_view(kv).substr(eq + 1)));
  }
  if (o.seed) set_value(c, "seed", *o.seed);
  if (o.risk_ratio) set_value(c, "risk_ratio", *o.risk_ratio);
  if (o.unlabeled_ratio) set_value(c, "unlabeled_ratio", *o.unlabeled_ratio);
  if (o.epochs) set_value(c, "epochs", *o.epochs);
  if (o.ablation) set_value(c, "ablation", *o.ablation);
  if (o.strict_paper) c.strict_paper = true;
  if (!o.nodes.empty()) set_value(c, "causality.nodes", o.nodes);
  if (!o.window.empty()) set_value(c, "causality.window", o.window);
  if (o.risk_ratios) set_value(c, "sweep.risk_ratios", *o.risk_ratios);
  if (o.unlabeled_ratios) set_value(c, "sweep.unlabeled_ratios", *o.unlabeled_ratios);
  if (o.seeds) set_value(c, "sweep.seeds", *o.seeds);
  if (o.with_ablation) c.sweep.with_ablation = true;
  c.validate();
  return c;
}

inline int cmd_ingest(const Options& o, std::ostream& out) {
  const auto c = resolve_config(o);
  const auto data = load_dataset(c);
  ensure_dir(o.out);
  const auto path = std::filesystem::path(o.out) / "manifest.txt";
  graph::write_manifest(path.string(), data.graph, data.bucket);
  out << "snapshots=" << data.graph.size() << " nodes=" << data.graph.registry().size()
      << " edges=" << data.graph.total_edges() << " records=" << data.records
      << " frequency=" << graph::to_string(data.bucket) << " manifest=" << path.string() << '\n';
  return kOk;
}

inline int cmd_train(const Options& o, std::ostream& out) {
  const auto c = resolve_config(o);
  const auto r = train(c);
  write_outputs(r, o.out);
  out << "run_id=" << r.id << " mean_test_auc=" << shortest(r.mean_test_auc) << " epochs=" << r.epochs
      << " out=" << o.out << '\n';
  return kOk;
}

inline int cmd_sweep(const Options& o, std::ostream& out) {
  const auto c = resolve_config(o);
  const auto data = load_dataset(c);
  const auto r = sweep(c, data, o.jobs);
  write_sweep_outputs(r, o.out);
  out << format_sweep_table(r);
  return kOk;
}

inline int cmd_analyze(const Options& o, std::ostream& out) {
  const auto c = resolve_config(o);
  std::vector<RowScore> scores;
  std::optional<Dataset> data;
  auto need_data = [&]() -> const Dataset& {
    if (!data) data = load_dataset(c);
    return *data;
  };
  if (!o.scores.empty()) {
    scores = read_scores(o.scores);
  } else {
    const auto ckpt = o.checkpoint.empty() ? (std::filesystem::path(o.out) / kCheckpointFile).string() : o.checkpoint;
    if (!std::filesystem::is_regular_file(ckpt)) throw DataError("checkpoint '" + ckpt + "' not found");
    const auto& d = need_data();
    const auto g = graph::standardize_features(d.graph, resolved_train_steps(c, d.graph.size()));
    Model m = load_model(c, g, read_checkpoint(ckpt));
    scores = score_rows(g, infer(m, c, g), m.risky_components);
  }
  const graph::DynamicGraph* g = c.causality.masks == MaskSource::Graph ? &need_data().graph : nullptr;
  const auto r = analyze(c, scores, g);
  write_analysis_outputs(r, o.out);
  out << "run_id=" << r.id << " analyzed=" << r.build.series.width()
      << " selected_lag=" << (r.selected ? std::to_string(r.selected->lags) : std::string("none"))
      << " effects=" << r.effects.effects.size() << " out=" << o.out << '\n';
  return kOk;
}

inline int cmd_report(const Options& o, std::ostream& out) {
  out << summarize_outputs(o.out);
  return kOk;
}

inline int cmd_synth(const Options& o, std::ostream& out) {
  const auto c = resolve_config(o);
  const auto edges = graph::generate_trust_network(synthetic_spec(c));
  const bool typed = c.synthetic.node_types > 1 || c.synthetic.edge_types > 1;
  graph::write_edge_csv(o.out, edges, typed);
  out << "edges=" << edges.size() << " out=" << o.out << '\n';
  return kOk;
}

}  // namespace detail

/// Parse and dispatch. Errors become one `error: kind=... field=... message="..."`
/// line on `err` and a nonzero return.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  detail::Options o;
  CLI::App app{"graphshield: spatio-temporal risk detection and risk-causality analysis on dynamic graphs"};
  app.require_subcommand(1, 1);
  auto* ingest = app.add_subcommand("ingest", "bucket an edge list into snapshots and write a manifest");
  auto* train_cmd = app.add_subcommand("train", "train, evaluate, and write report, scores and checkpoint");
  auto* sweep_cmd = app.add_subcommand("sweep", "grid of mean test AUCs over risk ratio x unlabeled ratio x seed");
  auto* analyze_cmd = app.add_subcommand("analyze", "VAR causality analysis of per-node risk series");
  auto* report_cmd = app.add_subcommand("report", "summarize outputs in --out");
  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic trust-network edge list to --out");
  for (auto* s : {ingest, train_cmd, sweep_cmd, analyze_cmd, synth_cmd}) detail::add_common(s, o);
  report_cmd->add_option("--out", o.out, "directory holding train / sweep / analyze outputs");
  analyze_cmd->add_option("--checkpoint", o.checkpoint, "checkpoint to score with (default: <out>/checkpoint.bin)");
  analyze_cmd->add_option("--scores", o.scores, "score table to analyze instead of a checkpoint");
  analyze_cmd->add_option("--nodes", o.nodes, "comma-separated node ids (default: most active nodes)");
  analyze_cmd->add_option("--window", o.window, "snapshot range FIRST:LAST");
  sweep_cmd->add_option("--risk-ratios", o.risk_ratios, "comma-separated risk ratios");
  sweep_cmd->add_option("--unlabeled-ratios", o.unlabeled_ratios, "comma-separated unlabeled ratios");
  sweep_cmd->add_option("--seeds", o.seeds, "comma-separated seeds");
  sweep_cmd->add_flag("--with-ablation", o.with_ablation, "add the supervised-ablation rows");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    return detail::report_error(err, "usage", "-", e.what(), kUsage);
  }

  try {
    if (ingest->parsed()) return detail::cmd_ingest(o, out);
    if (train_cmd->parsed()) return detail::cmd_train(o, out);
    if (sweep_cmd->parsed()) return detail::cmd_sweep(o, out);
    if (analyze_cmd->parsed()) return detail::cmd_analyze(o, out);
    if (report_cmd->parsed()) return detail::cmd_report(o, out);
    if (synth_cmd->parsed()) return detail::cmd_synth(o, out);
    return detail::report_error(err, "usage", "-", "no subcommand", kUsage);
  } catch (const ConfigError& e) {
    return detail::report_error(err, "config", e.field(), e.what(), kConfig);
  } catch (const DataError& e) {
    return detail::report_error(err, "data", e.line() ? "line:" + std::to_string(e.line()) : "-", e.what(), kData);
  } catch (const NumericError& e) {
    return detail::report_error(err, "numeric", "-", e.what(), kNumeric);
  } catch (const ShapeError& e) {
    return detail::report_error(err, "shape", "-", e.what(), kInternal);
  } catch (const std::exception& e) {
    return detail::report_error(err, "internal", "-", e.what(), kInternal);
  }
}

}  // namespace graphshield::pipeline
