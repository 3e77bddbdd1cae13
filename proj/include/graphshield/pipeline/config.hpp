#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "graphshield/encoder/config.hpp"
#include "graphshield/error.hpp"
#include "graphshield/graph/bucketing.hpp"
#include "graphshield/graph/edge_csv.hpp"
#include "graphshield/risk/head.hpp"

namespace graphshield::pipeline {

enum class Ablation { Full, Supervised };
enum class MaskSource { Graph, Full };

inline std::string to_string(Ablation a) { return a == Ablation::Full ? "full" : "supervised"; }
inline std::string to_string(MaskSource m) { return m == MaskSource::Graph ? "graph" : "full"; }

struct SyntheticConfig {
  std::size_t nodes = 500;
  std::size_t steps = 40;
  std::size_t edges_per_step = 150;
  double low_reputation_fraction = 0.1;
  std::int32_t node_types = 1;
  std::int32_t edge_types = 1;
  std::uint64_t seed = 7;
};

struct CausalityConfig {
  std::vector<std::size_t> lags{1, 2, 3};
  std::vector<double> lambda_grid{1e-3, 1e-2, 1e-1, 1.0};
  double alpha = 0.05;
  std::vector<std::int64_t> nodes;  // empty: pick top_n
  std::size_t top_n = 4;
  std::size_t window_begin = 0;     // 0: first snapshot
  std::size_t window_end = 0;       // 0: last snapshot
  MaskSource masks = MaskSource::Graph;
  std::size_t max_iterations = 10000;
  double tolerance = 1e-8;
};

struct SweepConfig {
  std::vector<double> risk_ratios{0.01, 0.05, 0.10};
  std::vector<double> unlabeled_ratios{0.0, 0.4, 0.9};
  std::vector<std::uint64_t> seeds{1, 2, 3};
  bool with_ablation = false;
};

/// Everything a run depends on. `std::nullopt`/"auto" fields are resolved
/// from the dataset by `resolved_*` helpers.
struct RunConfig {
  std::string dataset = "synthetic";
  graph::CsvSchema schema;
  std::string frequency = "auto";
  std::size_t train_steps = 0;  // 0: floor(0.7 T)
  double risk_ratio = 0.10;
  double unlabeled_ratio = 0.0;
  std::uint64_t seed = 1;
  std::optional<std::size_t> epochs;  // unset: 200 for Bitcoin sets, 300 otherwise
  double lr = 1e-4;
  encoder::EncoderConfig encoder;
  risk::HeadConfig head;
  double tau3 = 0.9;
  Ablation ablation = Ablation::Full;
  bool strict_paper = false;
  std::size_t cv_folds = 0;
  SyntheticConfig synthetic;
  CausalityConfig causality;
  SweepConfig sweep;

  void validate() const;
};

namespace detail {

inline std::string shortest(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline std::string trimmed(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

inline double to_double(const std::string& field, const std::string& text) {
  double v = 0.0;
  const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || r.ec != std::errc() || r.ptr != text.data() + text.size() || !std::isfinite(v))
    throw ConfigError(field, "expected a number, got '" + text + "'");
  return v;
}

template <typename Int>
Int to_int(const std::string& field, const std::string& text) {
  Int v{};
  const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || r.ec != std::errc() || r.ptr != text.data() + text.size())
    throw ConfigError(field, "expected an integer, got '" + text + "'");
  return v;
}

inline bool to_bool(const std::string& field, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError(field, "expected true|false, got '" + text + "'");
}

inline std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    item = trimmed(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T, typename F>
std::vector<T> to_list(const std::string& text, F convert) {
  std::vector<T> out;
  for (const auto& s : split_list(text)) out.push_back(convert(s));
  return out;
}

template <typename T, typename F>
std::string join(const std::vector<T>& v, F show) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + show(v[i]);
  return out;
}

inline std::string show_size(std::size_t v) { return std::to_string(v); }

inline char to_delimiter(const std::string& field, const std::string& text) {
  if (text == "tab" || text == "\\t") return '\t';
  if (text == "comma") return ',';
  if (text == "semicolon") return ';';
  if (text.size() == 1) return text[0];
  throw ConfigError(field, "expected a single character, comma, semicolon or tab");
}

inline std::string show_delimiter(char c) {
  if (c == '\t') return "tab";
  if (c == ',') return "comma";
  if (c == ';') return "semicolon";
  return std::string(1, c);
}

struct Field {
  const char* key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

// clang-format off
inline const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    auto num = [](const char* k, auto member) {
      return Field{k, [k, member](RunConfig& c, const std::string& v) { member(c) = to_double(k, v); },
                   [member](const RunConfig& c) { return shortest(member(const_cast<RunConfig&>(c))); }};
    };
    auto count = [](const char* k, auto member) {
      return Field{k, [k, member](RunConfig& c, const std::string& v) {
                     member(c) = to_int<std::remove_reference_t<decltype(member(c))>>(k, v); },
                   [member](const RunConfig& c) { return std::to_string(member(const_cast<RunConfig&>(c))); }};
    };
    auto flag = [](const char* k, auto member) {
      return Field{k, [k, member](RunConfig& c, const std::string& v) { member(c) = to_bool(k, v); },
                   [member](const RunConfig& c) { return std::string(member(const_cast<RunConfig&>(c)) ? "true" : "false"); }};
    };
    auto column = [](const char* k, auto member) {
      return Field{k, [k, member](RunConfig& c, const std::string& v) {
                     const int col = to_int<int>(k, v);
                     if (col < -1) throw ConfigError(k, "column must be >= 0, or -1 for absent");
                     member(c) = col; },
                   [member](const RunConfig& c) { return std::to_string(member(const_cast<RunConfig&>(c))); }};
    };

    f.push_back({"dataset", [](RunConfig& c, const std::string& v) {
                   if (v.empty()) throw ConfigError("dataset", "must not be empty");
                   c.dataset = v; },
                 [](const RunConfig& c) { return c.dataset; }});
    f.push_back({"dataset.delimiter", [](RunConfig& c, const std::string& v) { c.schema.delimiter = to_delimiter("dataset.delimiter", v); },
                 [](const RunConfig& c) { return show_delimiter(c.schema.delimiter); }});
    f.push_back(flag("dataset.header", [](RunConfig& c) -> bool& { return c.schema.skip_header; }));
    f.push_back(flag("dataset.allow_self_loops", [](RunConfig& c) -> bool& { return c.schema.allow_self_loops; }));
    f.push_back(column("dataset.source_column", [](RunConfig& c) -> int& { return c.schema.source; }));
    f.push_back(column("dataset.target_column", [](RunConfig& c) -> int& { return c.schema.target; }));
    f.push_back(column("dataset.rating_column", [](RunConfig& c) -> int& { return c.schema.rating; }));
    f.push_back(column("dataset.time_column", [](RunConfig& c) -> int& { return c.schema.time; }));
    f.push_back(column("dataset.source_type_column", [](RunConfig& c) -> int& { return c.schema.source_type; }));
    f.push_back(column("dataset.target_type_column", [](RunConfig& c) -> int& { return c.schema.target_type; }));
    f.push_back(column("dataset.edge_type_column", [](RunConfig& c) -> int& { return c.schema.edge_type; }));
    f.push_back({"frequency", [](RunConfig& c, const std::string& v) {
                   if (v != "auto") (void)graph::parse_bucket_spec(v);
                   c.frequency = v; },
                 [](const RunConfig& c) { return c.frequency; }});
    f.push_back(count("train_steps", [](RunConfig& c) -> std::size_t& { return c.train_steps; }));
    f.push_back(num("risk_ratio", [](RunConfig& c) -> double& { return c.risk_ratio; }));
    f.push_back(num("unlabeled_ratio", [](RunConfig& c) -> double& { return c.unlabeled_ratio; }));
    f.push_back(count("seed", [](RunConfig& c) -> std::uint64_t& { return c.seed; }));
    f.push_back({"epochs", [](RunConfig& c, const std::string& v) {
                   if (v == "auto") c.epochs.reset();
                   else c.epochs = to_int<std::size_t>("epochs", v); },
                 [](const RunConfig& c) { return c.epochs ? std::to_string(*c.epochs) : std::string("auto"); }});
    f.push_back(num("lr", [](RunConfig& c) -> double& { return c.lr; }));
    f.push_back(count("encoder.dim", [](RunConfig& c) -> std::size_t& { return c.encoder.dim; }));
    f.push_back(count("encoder.layers", [](RunConfig& c) -> std::size_t& { return c.encoder.layers; }));
    f.push_back(count("encoder.heads", [](RunConfig& c) -> std::size_t& { return c.encoder.heads; }));
    f.push_back(num("encoder.tau_init_logit", [](RunConfig& c) -> double& { return c.encoder.tau_init_logit; }));
    f.push_back({"encoder.reconstruction", [](RunConfig& c, const std::string& v) { c.encoder.reconstruction = encoder::parse_reconstruction_mode(v); },
                 [](const RunConfig& c) { return encoder::to_string(c.encoder.reconstruction); }});
    f.push_back(count("encoder.exact_reconstruction_limit", [](RunConfig& c) -> std::size_t& { return c.encoder.exact_reconstruction_limit; }));
    f.push_back(count("head.layers", [](RunConfig& c) -> std::size_t& { return c.head.layers; }));
    f.push_back(count("head.hidden", [](RunConfig& c) -> std::size_t& { return c.head.hidden; }));
    f.push_back(count("head.components", [](RunConfig& c) -> std::size_t& { return c.head.components; }));
    f.push_back(num("head.tau3", [](RunConfig& c) -> double& { return c.tau3; }));
    f.push_back({"ablation", [](RunConfig& c, const std::string& v) {
                   if (v == "full") c.ablation = Ablation::Full;
                   else if (v == "supervised") c.ablation = Ablation::Supervised;
                   else throw ConfigError("ablation", "expected full|supervised, got '" + v + "'"); },
                 [](const RunConfig& c) { return to_string(c.ablation); }});
    f.push_back(flag("strict_paper", [](RunConfig& c) -> bool& { return c.strict_paper; }));
    f.push_back(count("cv.folds", [](RunConfig& c) -> std::size_t& { return c.cv_folds; }));
    f.push_back(count("synthetic.nodes", [](RunConfig& c) -> std::size_t& { return c.synthetic.nodes; }));
    f.push_back(count("synthetic.steps", [](RunConfig& c) -> std::size_t& { return c.synthetic.steps; }));
    f.push_back(count("synthetic.edges_per_step", [](RunConfig& c) -> std::size_t& { return c.synthetic.edges_per_step; }));
    f.push_back(num("synthetic.low_reputation_fraction", [](RunConfig& c) -> double& { return c.synthetic.low_reputation_fraction; }));
    f.push_back(count("synthetic.node_types", [](RunConfig& c) -> std::int32_t& { return c.synthetic.node_types; }));
    f.push_back(count("synthetic.edge_types", [](RunConfig& c) -> std::int32_t& { return c.synthetic.edge_types; }));
    f.push_back(count("synthetic.seed", [](RunConfig& c) -> std::uint64_t& { return c.synthetic.seed; }));
    f.push_back({"causality.lags", [](RunConfig& c, const std::string& v) {
                   c.causality.lags = to_list<std::size_t>(v, [](const std::string& s) { return to_int<std::size_t>("causality.lags", s); }); },
                 [](const RunConfig& c) { return join(c.causality.lags, show_size); }});
    f.push_back({"causality.lambda_grid", [](RunConfig& c, const std::string& v) {
                   c.causality.lambda_grid = to_list<double>(v, [](const std::string& s) { return to_double("causality.lambda_grid", s); }); },
                 [](const RunConfig& c) { return join(c.causality.lambda_grid, shortest); }});
    f.push_back(num("causality.alpha", [](RunConfig& c) -> double& { return c.causality.alpha; }));
    f.push_back({"causality.nodes", [](RunConfig& c, const std::string& v) {
                   c.causality.nodes = to_list<std::int64_t>(v, [](const std::string& s) { return to_int<std::int64_t>("causality.nodes", s); }); },
                 [](const RunConfig& c) { return join(c.causality.nodes, [](std::int64_t x) { return std::to_string(x); }); }});
    f.push_back(count("causality.top_n", [](RunConfig& c) -> std::size_t& { return c.causality.top_n; }));
    f.push_back({"causality.window", [](RunConfig& c, const std::string& v) {
                   if (v.empty() || v == "all") { c.causality.window_begin = c.causality.window_end = 0; return; }
                   const auto colon = v.find(':');
                   if (colon == std::string::npos) throw ConfigError("causality.window", "expected FIRST:LAST or all");
                   c.causality.window_begin = to_int<std::size_t>("causality.window", trimmed(v.substr(0, colon)));
                   c.causality.window_end = to_int<std::size_t>("causality.window", trimmed(v.substr(colon + 1))); },
                 [](const RunConfig& c) {
                   if (!c.causality.window_begin && !c.causality.window_end) return std::string("all");
                   return std::to_string(c.causality.window_begin) + ":" + std::to_string(c.causality.window_end); }});
    f.push_back({"causality.masks", [](RunConfig& c, const std::string& v) {
                   if (v == "graph") c.causality.masks = MaskSource::Graph;
                   else if (v == "full") c.causality.masks = MaskSource::Full;
                   else throw ConfigError("causality.masks", "expected graph|full, got '" + v + "'"); },
                 [](const RunConfig& c) { return to_string(c.causality.masks); }});
    f.push_back(count("causality.max_iterations", [](RunConfig& c) -> std::size_t& { return c.causality.max_iterations; }));
    f.push_back(num("causality.tolerance", [](RunConfig& c) -> double& { return c.causality.tolerance; }));
    f.push_back({"sweep.risk_ratios", [](RunConfig& c, const std::string& v) {
                   c.sweep.risk_ratios = to_list<double>(v, [](const std::string& s) { return to_double("sweep.risk_ratios", s); }); },
                 [](const RunConfig& c) { return join(c.sweep.risk_ratios, shortest); }});
    f.push_back({"sweep.unlabeled_ratios", [](RunConfig& c, const std::string& v) {
                   c.sweep.unlabeled_ratios = to_list<double>(v, [](const std::string& s) { return to_double("sweep.unlabeled_ratios", s); }); },
                 [](const RunConfig& c) { return join(c.sweep.unlabeled_ratios, shortest); }});
    f.push_back({"sweep.seeds", [](RunConfig& c, const std::string& v) {
                   c.sweep.seeds = to_list<std::uint64_t>(v, [](const std::string& s) { return to_int<std::uint64_t>("sweep.seeds", s); }); },
                 [](const RunConfig& c) { return join(c.sweep.seeds, [](std::uint64_t x) { return std::to_string(x); }); }});
    f.push_back(flag("sweep.with_ablation", [](RunConfig& c) -> bool& { return c.sweep.with_ablation; }));
    return f;
  }();
  return table;
}
// clang-format on

}  // namespace detail

/// Set one key. Unknown keys and malformed values raise ConfigError naming the key.
inline void set_value(RunConfig& c, const std::string& key, const std::string& value) {
  for (const auto& f : detail::fields())
    if (key == f.key) {
      f.set(c, value);
      return;
    }
  throw ConfigError(key, "unknown configuration key");
}

/// `key = value` lines; '#' starts a comment; blank lines ignored.
inline void apply_config_text(RunConfig& c, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = detail::trimmed(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno), "expected 'key = value', got '" + body + "'");
    const std::string key = detail::trimmed(std::string_view(body).substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno), "missing key");
    set_value(c, key, detail::trimmed(std::string_view(body).substr(eq + 1)));
  }
}

inline RunConfig parse_config(const std::string& text) {
  RunConfig c;
  apply_config_text(c, text);
  return c;
}

inline void apply_config_file(RunConfig& c, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config", "cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  apply_config_text(c, buf.str());
}

/// Every key in table order, one `key = value` line each. Round-trips through parse_config.
inline std::string format_config(const RunConfig& c) {
  std::string out;
  for (const auto& f : detail::fields()) out += std::string(f.key) + " = " + f.get(c) + "\n";
  return out;
}

inline std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& f : detail::fields()) out.push_back(f.key);
  return out;
}

/// FNV-1a over the canonical config text, as 16 hex digits.
inline std::string run_id(const RunConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : format_config(c)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline void RunConfig::validate() const {
  if (!(risk_ratio > 0.0 && risk_ratio < 1.0)) throw ConfigError("risk_ratio", "must lie in (0, 1)");
  if (!(unlabeled_ratio >= 0.0 && unlabeled_ratio < 1.0)) throw ConfigError("unlabeled_ratio", "must lie in [0, 1)");
  if (!(lr > 0.0)) throw ConfigError("lr", "must be positive");
  if (!(tau3 >= 0.0 && tau3 <= 1.0)) throw ConfigError("head.tau3", "must lie in [0, 1]");
  if (ablation == Ablation::Supervised && tau3 == 0.0)
    throw ConfigError("ablation", "supervised ablation with head.tau3 = 0 leaves no loss term");
  encoder.validate();
  if (head.layers == 0) throw ConfigError("head.layers", "must be at least 1");
  if (head.hidden == 0) throw ConfigError("head.hidden", "must be positive");
  if (head.components < 2) throw ConfigError("head.components", "need at least 2 mixture components");
  if (causality.lags.empty()) throw ConfigError("causality.lags", "need at least one candidate lag");
  for (auto l : causality.lags)
    if (l == 0) throw ConfigError("causality.lags", "lags must be positive");
  if (causality.lambda_grid.empty()) throw ConfigError("causality.lambda_grid", "need at least one penalty");
  for (double l : causality.lambda_grid)
    if (!(l >= 0.0)) throw ConfigError("causality.lambda_grid", "penalties must be non-negative");
  if (!(causality.alpha > 0.0 && causality.alpha < 1.0)) throw ConfigError("causality.alpha", "must lie in (0, 1)");
  if (causality.top_n < 2 && causality.nodes.empty()) throw ConfigError("causality.top_n", "need at least 2 series");
  if (!causality.nodes.empty() && causality.nodes.size() < 2) throw ConfigError("causality.nodes", "need at least 2 nodes");
  if ((causality.window_begin == 0) != (causality.window_end == 0) ||
      causality.window_begin > causality.window_end)
    throw ConfigError("causality.window", "expected 1 <= FIRST <= LAST");
  if (!(causality.tolerance > 0.0)) throw ConfigError("causality.tolerance", "must be positive");
  if (causality.max_iterations == 0) throw ConfigError("causality.max_iterations", "must be positive");
  if (sweep.risk_ratios.empty()) throw ConfigError("sweep.risk_ratios", "grid needs at least one value");
  if (sweep.unlabeled_ratios.empty()) throw ConfigError("sweep.unlabeled_ratios", "grid needs at least one value");
  if (sweep.seeds.empty()) throw ConfigError("sweep.seeds", "grid needs at least one seed");
  if (synthetic.nodes < 2) throw ConfigError("synthetic.nodes", "need at least 2 nodes");
  if (synthetic.steps < 2) throw ConfigError("synthetic.steps", "need at least 2 steps");
  if (synthetic.edges_per_step == 0) throw ConfigError("synthetic.edges_per_step", "must be positive");
  if (synthetic.node_types < 1) throw ConfigError("synthetic.node_types", "must be at least 1");
  if (synthetic.edge_types < 1) throw ConfigError("synthetic.edge_types", "must be at least 1");
  if (!(synthetic.low_reputation_fraction >= 0.0 && synthetic.low_reputation_fraction < 1.0))
    throw ConfigError("synthetic.low_reputation_fraction", "must lie in [0, 1)");
}

}  // namespace graphshield::pipeline
