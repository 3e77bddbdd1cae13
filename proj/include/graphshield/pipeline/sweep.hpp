#pragma once

#include <atomic>
#include <exception>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "graphshield/pipeline/train.hpp"

namespace graphshield::pipeline {

struct SweepRun {
  double risk_ratio = 0.0;
  double unlabeled_ratio = 0.0;
  Ablation variant = Ablation::Full;
  std::uint64_t seed = 0;
  double mean_test_auc = 0.0;
};

struct SweepCell {
  double risk_ratio = 0.0;
  double unlabeled_ratio = 0.0;
  Ablation variant = Ablation::Full;
  double mean_test_auc = 0.0;  // average over seeds
};

struct SweepResult {
  RunConfig config;
  std::string id;
  std::vector<SweepRun> runs;
  std::vector<SweepCell> cells;
};

inline std::vector<Ablation> sweep_variants(const RunConfig& c) {
  if (c.sweep.with_ablation) return {Ablation::Full, Ablation::Supervised};
  return {c.ablation};
}

/// Every (unlabeled, variant, risk, seed) combination, each an isolated
/// deterministic train run. Runs execute on up to `jobs` threads; results are
/// ordered by grid position, never by completion.
inline SweepResult sweep(const RunConfig& c, const Dataset& data, std::size_t jobs) {
  c.validate();
  if (jobs == 0) throw ConfigError("jobs", "must be at least 1");
  SweepResult out;
  out.config = c;
  out.id = run_id(c);
  const auto variants = sweep_variants(c);
  for (double u : c.sweep.unlabeled_ratios)
    for (Ablation v : variants)
      for (double rr : c.sweep.risk_ratios)
        for (std::uint64_t s : c.sweep.seeds) out.runs.push_back({rr, u, v, s, 0.0});

  std::vector<RunConfig> configs;
  for (const auto& r : out.runs) {
    RunConfig rc = c;
    rc.risk_ratio = r.risk_ratio;
    rc.unlabeled_ratio = r.unlabeled_ratio;
    rc.ablation = r.variant;
    rc.seed = r.seed;
    rc.validate();
    configs.push_back(rc);
  }

  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(out.runs.size());
  auto worker = [&] {
    for (std::size_t i = next++; i < out.runs.size(); i = next++) {
      try {
        out.runs[i].mean_test_auc = train(configs[i], data).mean_test_auc;
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min(jobs, out.runs.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(worker);
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  const std::size_t per_cell = c.sweep.seeds.size();
  for (std::size_t i = 0; i < out.runs.size(); i += per_cell) {
    double s = 0.0;
    for (std::size_t k = 0; k < per_cell; ++k) s += out.runs[i + k].mean_test_auc;
    const auto& r = out.runs[i];
    out.cells.push_back({r.risk_ratio, r.unlabeled_ratio, r.variant, s / static_cast<double>(per_cell)});
  }
  return out;
}

/// Rows are (unlabeled ratio, variant); columns are risk ratios.
inline std::string format_sweep_table(const SweepResult& r) {
  using detail::shortest;
  std::ostringstream o;
  o << "unlabeled_ratio\tvariant";
  for (double rr : r.config.sweep.risk_ratios) o << "\trisk_ratio=" << shortest(rr);
  o << '\n';
  const std::size_t width = r.config.sweep.risk_ratios.size();
  for (std::size_t i = 0; i < r.cells.size(); i += width) {
    o << shortest(r.cells[i].unlabeled_ratio) << '\t' << to_string(r.cells[i].variant);
    for (std::size_t k = 0; k < width; ++k) o << '\t' << shortest(r.cells[i + k].mean_test_auc);
    o << '\n';
  }
  return o.str();
}

inline std::string format_sweep_runs(const SweepResult& r) {
  using detail::shortest;
  std::ostringstream o;
  o << "risk_ratio\tunlabeled_ratio\tvariant\tseed\tmean_test_auc\n";
  for (const auto& x : r.runs)
    o << shortest(x.risk_ratio) << '\t' << shortest(x.unlabeled_ratio) << '\t' << to_string(x.variant) << '\t' << x.seed
      << '\t' << shortest(x.mean_test_auc) << '\n';
  return o.str();
}

inline std::string format_sweep_report(const SweepResult& r) {
  std::ostringstream o;
  o << "graphshield sweep report\nrun_id " << r.id << "\n\n[config]\n" << format_config(r.config);
  o << "\n[table]\n" << format_sweep_table(r) << "\n[runs]\n" << format_sweep_runs(r);
  return o.str();
}

inline constexpr const char* kSweepReportFile = "sweep_report.txt";
inline constexpr const char* kSweepTableFile = "sweep.tsv";

inline void write_sweep_outputs(const SweepResult& r, const std::filesystem::path& dir) {
  detail::ensure_dir(dir);
  detail::write_text(dir / kSweepReportFile, format_sweep_report(r));
  detail::write_text(dir / kSweepTableFile, format_sweep_table(r));
}

}  // namespace graphshield::pipeline
