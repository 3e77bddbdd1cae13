#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "graphshield/pipeline/analyze.hpp"
#include "graphshield/pipeline/sweep.hpp"
#include "graphshield/pipeline/train.hpp"

namespace graphshield::pipeline {

namespace detail {

inline std::optional<std::string> read_text(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) return std::nullopt;
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

/// Value after "key " on the first matching line outside the [config] echo.
inline std::string lookup(const std::string& text, const std::string& key) {
  std::istringstream in(text);
  std::string line;
  bool in_config = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.front() == '[') in_config = line == "[config]";
    if (!in_config && line.rfind(key + " ", 0) == 0) return line.substr(key.size() + 1);
  }
  return "-";
}

}  // namespace detail

/// Summary of whatever train / sweep / analyze outputs exist under `dir`.
inline std::string summarize_outputs(const std::filesystem::path& dir) {
  std::ostringstream o;
  bool any = false;
  if (const auto m = detail::read_text(dir / kReportFile)) {
    any = true;
    o << "[train]\nrun_id " << detail::lookup(*m, "run_id") << "\nsnapshots " << detail::lookup(*m, "snapshots")
      << "\ntrain_steps " << detail::lookup(*m, "train_steps") << "\nepochs " << detail::lookup(*m, "epochs")
      << "\nmean_test_auc " << detail::lookup(*m, "mean_test_auc") << "\n";
    const auto cv = detail::lookup(*m, "mean_cv_auc");
    if (cv != "-") o << "mean_cv_auc " << cv << "\n";
  }
  if (const auto s = detail::read_text(dir / kSweepTableFile)) {
    any = true;
    o << (o.tellp() > 0 ? "\n" : "") << "[sweep]\n" << *s;
  }
  if (const auto a = detail::read_text(dir / kAnalysisReportFile)) {
    any = true;
    o << (o.tellp() > 0 ? "\n" : "") << "[analysis]\nrun_id " << detail::lookup(*a, "run_id") << "\nanalyzed "
      << detail::lookup(*a, "analyzed") << "\nselected_lag " << detail::lookup(*a, "selected_lag") << "\nretained "
      << detail::lookup(*a, "retained") << "\n";
  }
  if (!any) throw DataError("no train, sweep or analysis outputs under '" + dir.string() + "'");
  return o.str();
}

}  // namespace graphshield::pipeline
