#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "graphshield/causality/simulate.hpp"
#include "graphshield/graph/manifest.hpp"
#include "graphshield/pipeline/cli.hpp"
#include "support/var_fixtures.hpp"

namespace fs = std::filesystem;
namespace gp = graphshield::pipeline;
using graphshield::ConfigError;
using graphshield::DataError;
using graphshield::Rng;

namespace {

const char* kSmall = R"(# tiny synthetic set
dataset = synthetic
synthetic.nodes = 120
synthetic.steps = 12
synthetic.edges_per_step = 60
encoder.dim = 16
encoder.layers = 2
head.hidden = 16
lr = 0.001
epochs = 8
)";

class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = fs::temp_directory_path() /
            ("gs_" + std::string(info->test_suite_name()) + "_" + info->name() + "_" + std::to_string(::getpid()));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& s) const { return path_ / s; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
}

struct CliRun {
  int code = 0;
  std::string out, err;
};

CliRun cli(std::vector<std::string> args) {
  args.insert(args.begin(), "graphshield");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  CliRun r;
  r.code = gp::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

gp::RunConfig small_config() { return gp::parse_config(kSmall); }

std::string section(const std::string& report, const std::string& name) {
  const auto start = report.find("[" + name + "]\n");
  if (start == std::string::npos) return {};
  const auto end = report.find("\n\n", start);
  return report.substr(start, end == std::string::npos ? std::string::npos : end - start);
}

bool is_error_line(const std::string& err) {
  static const std::regex line(R"(^error: kind=[a-z]+ field=\S+ message="([^"\\]|\\.)*"\n$)");
  return std::regex_match(err, line);
}

}  // namespace

TEST(RunConfig, DefaultsMatchTheReferenceHyperparameters) {
  const gp::RunConfig c;
  EXPECT_EQ(c.encoder.dim, 64u);
  EXPECT_EQ(c.encoder.layers, 3u);
  EXPECT_EQ(c.tau3, 0.9);
  EXPECT_EQ(c.lr, 1e-4);
  EXPECT_EQ(c.ablation, gp::Ablation::Full);
  EXPECT_FALSE(c.strict_paper);
  EXPECT_EQ(gp::resolved_epochs(c), 300u);
  gp::RunConfig b;
  b.dataset = "bitcoin-alpha";
  EXPECT_EQ(gp::resolved_epochs(b), 200u);
  b.dataset = "data/soc-sign-bitcoinotc.csv.gz";
  EXPECT_EQ(gp::resolved_epochs(b), 200u);
  b.epochs = 5;
  EXPECT_EQ(gp::resolved_epochs(b), 5u);
  EXPECT_NO_THROW(c.validate());
}

TEST(RunConfig, TrainStepsDefaultGivesTheBitcoinSplit) {
  const gp::RunConfig c;
  EXPECT_EQ(gp::resolved_train_steps(c, 137), 95u);
  EXPECT_EQ(gp::resolved_train_steps(c, 136), 95u);
  EXPECT_EQ(gp::resolved_train_steps(c, 2), 1u);
  gp::RunConfig e;
  e.train_steps = 10;
  EXPECT_THROW(gp::resolved_train_steps(e, 10), ConfigError);
}

TEST(RunConfig, ParseFormatRoundTrip) {
  auto c = small_config();
  gp::set_value(c, "causality.window", "3:9");
  gp::set_value(c, "causality.nodes", "4, 8,15");
  gp::set_value(c, "dataset.delimiter", "tab");
  gp::set_value(c, "strict_paper", "true");
  const std::string text = gp::format_config(c);
  const auto back = gp::parse_config(text);
  EXPECT_EQ(gp::format_config(back), text);
  EXPECT_EQ(back.causality.window_begin, 3u);
  EXPECT_EQ(back.causality.nodes, (std::vector<std::int64_t>{4, 8, 15}));
  EXPECT_EQ(back.schema.delimiter, '\t');
  EXPECT_EQ(gp::run_id(back), gp::run_id(c));
  EXPECT_EQ(gp::run_id(back).size(), 16u);
}

TEST(RunConfig, CommentsAndBlankLinesIgnored) {
  const auto c = gp::parse_config("\n# header\n  seed = 42   # trailing\n\nrisk_ratio=0.05\n");
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.risk_ratio, 0.05);
}

TEST(RunConfig, ErrorsNameTheField) {
  auto field_of = [](const std::string& text) {
    try {
      gp::parse_config(text).validate();
    } catch (const ConfigError& e) {
      return e.field();
    }
    return std::string("<none>");
  };
  EXPECT_EQ(field_of("unknown_key = 1"), "unknown_key");
  EXPECT_EQ(field_of("seed = abc"), "seed");
  EXPECT_EQ(field_of("lr = -1"), "lr");
  EXPECT_EQ(field_of("risk_ratio = 1.5"), "risk_ratio");
  EXPECT_EQ(field_of("unlabeled_ratio = 1"), "unlabeled_ratio");
  EXPECT_EQ(field_of("encoder.dim = 30\nencoder.heads = 4"), "encoder.heads");
  EXPECT_EQ(field_of("head.components = 1"), "head.components");
  EXPECT_EQ(field_of("ablation = partial"), "ablation");
  EXPECT_EQ(field_of("causality.window = 5"), "causality.window");
  EXPECT_EQ(field_of("causality.alpha = 0"), "causality.alpha");
  EXPECT_EQ(field_of("frequency = fortnightly"), "freq");
  EXPECT_EQ(field_of("just some text"), "line 1");
}

TEST(RollingFolds, ExpandingWindowsOverTrainingSteps) {
  const auto f = gp::rolling_folds(95, 5);
  ASSERT_EQ(f.size(), 5u);
  for (std::size_t k = 0; k < 5; ++k) {
    EXPECT_EQ(f[k].first, 15 * (k + 1));
    EXPECT_EQ(f[k].second, 15 * (k + 2));
    EXPECT_LE(f[k].second, 95u);
  }
  EXPECT_THROW(gp::rolling_folds(5, 5), ConfigError);
  EXPECT_THROW(gp::rolling_folds(95, 0), ConfigError);
}

TEST(Dataset, ResolvesUnderTheDataDirectory) {
  TempDir dir;
  auto c = small_config();
  graphshield::graph::write_edge_csv((dir / "soc-sign-bitcoinalpha.csv").string(),
                                     graphshield::graph::generate_trust_network(gp::synthetic_spec(c)));
  ::setenv(gp::kDataDirEnv, dir.path().c_str(), 1);
  c.dataset = "bitcoin-alpha";
  const auto d = gp::load_dataset(c);
  EXPECT_TRUE(d.bitcoin);
  EXPECT_EQ(d.bucket.fixed_seconds, gp::kBitcoinWindowSeconds);
  EXPECT_EQ(d.records, 720u);
  EXPECT_LE(d.graph.total_edges(), d.records);  // trailing partial window dropped
  c.dataset = "soc-sign-bitcoinalpha.csv";
  EXPECT_NO_THROW(gp::load_dataset(c));
  c.dataset = "absent.csv";
  EXPECT_THROW(gp::load_dataset(c), DataError);
  ::unsetenv(gp::kDataDirEnv);
}

TEST(Train, ZeroEpochsReportsInitialLossAndInitialCheckpoint) {
  TempDir dir;
  auto c = small_config();
  c.epochs = 0;
  const auto r = gp::train(c);
  ASSERT_EQ(r.loss.size(), 1u);
  EXPECT_EQ(r.loss[0].epoch, 0u);
  gp::write_outputs(r, dir.path());
  const auto report = slurp(dir / gp::kReportFile);
  const auto loss = section(report, "loss");
  EXPECT_EQ(std::count(loss.begin(), loss.end(), '\n'), 2);  // header + epoch 0

  const auto data = gp::load_dataset(c);
  const auto init = gp::initial_model(c, graphshield::encoder::type_slots(data.graph));
  const auto saved = graphshield::read_checkpoint((dir / gp::kCheckpointFile).string());
  for (std::size_t i = 0; i < init.params.size(); ++i) {
    const auto& p = init.params[i];
    const auto it = std::find_if(saved.begin(), saved.end(), [&](const auto& t) { return t.name == p.name; });
    ASSERT_NE(it, saved.end()) << p.name;
    for (std::size_t k = 0; k < p.value.size(); ++k) ASSERT_EQ(it->value[k], p.value[k]) << p.name;
  }
}

TEST(Train, ReportEchoesConfigAndMeanIsTheAverage) {
  auto c = small_config();
  const auto r = gp::train(c);
  const auto report = gp::format_report(r);
  EXPECT_NE(report.find(gp::format_config(c)), std::string::npos);
  EXPECT_NE(report.find("run_id " + gp::run_id(c)), std::string::npos);
  EXPECT_EQ(r.loss.size(), 9u);
  double s = 0.0;
  int k = 0;
  for (const auto& a : r.aucs)
    if (a.auc) s += *a.auc, ++k;
  ASSERT_GT(k, 0);
  EXPECT_DOUBLE_EQ(r.mean_test_auc, s / k);
  EXPECT_EQ(r.aucs.front().t, r.train_steps + 1);
  EXPECT_EQ(r.aucs.back().t, r.snapshots);
}

TEST(Train, SameSeedGivesByteIdenticalOutputs) {
  TempDir dir;
  spit(dir / "run.cfg", kSmall);
  const auto a = cli({"train", "--config", (dir / "run.cfg").string(), "--seed", "5", "--out", (dir / "a").string()});
  const auto b = cli({"train", "--config", (dir / "run.cfg").string(), "--seed", "5", "--out", (dir / "b").string()});
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0) << b.err;
  for (const char* f : {gp::kReportFile, gp::kScoresFile, gp::kCheckpointFile})
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  const auto c = cli({"train", "--config", (dir / "run.cfg").string(), "--seed", "6", "--out", (dir / "c").string()});
  ASSERT_EQ(c.code, 0) << c.err;
  EXPECT_NE(slurp(dir / "a" / gp::kReportFile), slurp(dir / "c" / gp::kReportFile));
}

TEST(Train, ScoresCoverEveryRowAndAreProbabilities) {
  const auto r = gp::train(small_config());
  EXPECT_EQ(r.scores.size(), r.rows);
  for (const auto& s : r.scores) {
    EXPECT_GE(s.risk, 0.0);
    EXPECT_LE(s.risk, 1.0);
    EXPECT_LT(s.component, 2u);
  }
  std::ostringstream o;
  gp::write_scores(o, r.scores);
  std::istringstream in(o.str());
  const auto back = gp::parse_scores(in);
  ASSERT_EQ(back.size(), r.scores.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].node, r.scores[i].node);
    EXPECT_EQ(back[i].risk, r.scores[i].risk);
  }
}

TEST(Train, CheckpointReloadReproducesScores) {
  TempDir dir;
  auto c = small_config();
  c.head.components = 3;
  const auto r = gp::train(c);
  gp::write_outputs(r, dir.path());
  const auto data = gp::load_dataset(c);
  const auto g = graphshield::graph::standardize_features(data.graph, r.train_steps);
  auto m = gp::load_model(c, g, graphshield::read_checkpoint((dir / gp::kCheckpointFile).string()));
  EXPECT_EQ(m.risky_components, r.model.risky_components);
  const auto again = gp::score_rows(g, gp::infer(m, c, g), m.risky_components);
  ASSERT_EQ(again.size(), r.scores.size());
  for (std::size_t i = 0; i < again.size(); ++i) EXPECT_EQ(again[i].risk, r.scores[i].risk);
}

TEST(Train, CrossValidationAddsFoldLines) {
  auto c = small_config();
  c.cv_folds = 2;
  c.synthetic.steps = 20;
  const auto r = gp::train(c);
  ASSERT_EQ(r.cv.size(), 2u);
  EXPECT_EQ(r.cv[0].train_end, r.train_steps / 3);
  const auto cv = section(gp::format_report(r), "cv");
  EXPECT_NE(cv.find("mean_cv_auc"), std::string::npos);
}

TEST(Sweep, SingleCellEqualsTrainMeanAuc) {
  auto c = small_config();
  c.sweep.risk_ratios = {c.risk_ratio};
  c.sweep.unlabeled_ratios = {c.unlabeled_ratio};
  c.sweep.seeds = {c.seed};
  const auto data = gp::load_dataset(c);
  const auto s = gp::sweep(c, data, 1);
  ASSERT_EQ(s.cells.size(), 1u);
  EXPECT_EQ(s.cells[0].mean_test_auc, gp::train(c).mean_test_auc);
}

TEST(Sweep, AblationRowsAndParallelismDoNotChangeResults) {
  auto c = small_config();
  c.epochs = 3;
  c.sweep.risk_ratios = {0.05, 0.1};
  c.sweep.unlabeled_ratios = {0.0, 0.5};
  c.sweep.seeds = {1, 2};
  c.sweep.with_ablation = true;
  const auto data = gp::load_dataset(c);
  const auto serial = gp::sweep(c, data, 1);
  const auto parallel = gp::sweep(c, data, 4);
  EXPECT_EQ(serial.runs.size(), 16u);
  EXPECT_EQ(serial.cells.size(), 8u);
  EXPECT_EQ(gp::format_sweep_report(serial), gp::format_sweep_report(parallel));
  const auto table = gp::format_sweep_table(serial);
  EXPECT_NE(table.find("\tsupervised\t"), std::string::npos);
  EXPECT_NE(table.find("risk_ratio=0.05\trisk_ratio=0.1"), std::string::npos);
  for (const auto& cell : serial.cells) {
    double s = 0.0;
    for (const auto& r : serial.runs)
      if (r.risk_ratio == cell.risk_ratio && r.unlabeled_ratio == cell.unlabeled_ratio && r.variant == cell.variant)
        s += r.mean_test_auc;
    EXPECT_DOUBLE_EQ(cell.mean_test_auc, s / 2.0);
  }
}

TEST(Analyze, CarryForwardStartsAtOneHalf) {
  std::vector<gp::RowScore> scores = {{1, 1, 0.2, 0}, {2, 2, 0.9, 1}, {1, 3, 0.4, 0}, {2, 4, 0.1, 0}};
  gp::CausalityConfig cc;
  cc.nodes = {1, 2};
  const auto b = gp::build_series(scores, cc);
  ASSERT_EQ(b.series.length(), 4u);
  const std::vector<double> one = {0.2, 0.2, 0.4, 0.4}, two = {0.5, 0.9, 0.9, 0.1};
  for (int t = 0; t < 4; ++t) {
    EXPECT_EQ(b.series.values(t, 0), one[t]);
    EXPECT_EQ(b.series.values(t, 1), two[t]);
  }
  cc.window_begin = 2;
  cc.window_end = 3;
  const auto w = gp::build_series(scores, cc);
  EXPECT_EQ(w.series.values(0, 0), 0.2);  // carried in from before the window
}

TEST(Analyze, MostActiveNodesAreDefault) {
  std::vector<gp::RowScore> scores;
  for (std::size_t t = 1; t <= 5; ++t) {
    scores.push_back({7, t, 0.1 * static_cast<double>(t), 0});
    if (t % 2) scores.push_back({3, t, 0.3, 0});
    if (t == 1) scores.push_back({9, t, 0.3, 0});
  }
  EXPECT_EQ(gp::most_active_nodes(scores, 1, 5, 2), (std::vector<std::int64_t>{7, 3}));
}

TEST(Analyze, ConstantSeriesGiveEmptyEffectGraph) {
  TempDir dir;
  std::ostringstream o;
  std::vector<gp::RowScore> scores;
  for (std::size_t t = 1; t <= 60; ++t)
    for (std::int64_t id : {11, 12, 13, 14}) scores.push_back({id, t, 0.3, 0});
  gp::write_scores(o, scores);
  spit(dir / "scores.tsv", o.str());
  const auto r = cli({"analyze", "--scores", (dir / "scores.tsv").string(), "--set", "causality.masks=full", "--out",
                      (dir / "out").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto dot = slurp(dir / "out" / gp::kEffectsDotFile);
  EXPECT_EQ(dot.find("->"), std::string::npos);
  const auto table = slurp(dir / "out" / gp::kEffectsTableFile);
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 1);
  EXPECT_NE(slurp(dir / "out" / gp::kAnalysisReportFile).find("constant 11,12,13,14"), std::string::npos);
}

TEST(Analyze, PlantedEffectAppearsInDot) {
  TempDir dir;
  const auto planted = graphshield::testing::planted_system();
  Rng rng(2024);
  const auto cov = planted.precision.inverse().eval();
  const auto sim = graphshield::causality::simulate_var({planted.coefficient}, cov, 300, rng);
  const std::vector<std::int64_t> ids = {101, 102, 103, 104};
  std::vector<gp::RowScore> scores;
  for (std::size_t t = 0; t < sim.length(); ++t)
    for (std::size_t j = 0; j < 4; ++j)
      scores.push_back({ids[j], t + 1, 0.5 + 0.1 * sim.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)), 0});
  std::ostringstream o;
  gp::write_scores(o, scores);
  spit(dir / "scores.tsv", o.str());
  const auto r = cli({"analyze", "--scores", (dir / "scores.tsv").string(), "--nodes", "101,102,103,104", "--set",
                      "causality.masks=full", "--out", (dir / "out").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto dot = slurp(dir / "out" / gp::kEffectsDotFile);
  // series 1 is driven by series 0; series 3 by series 2
  EXPECT_NE(dot.find("\"101\" -> \"102\" [label=\"PDC="), std::string::npos) << dot;
  EXPECT_NE(dot.find("\"103\" -> \"104\" [label=\"PDC="), std::string::npos) << dot;
  EXPECT_NE(dot.find("\"101\" -> \"103\" [dir=none"), std::string::npos) << dot;
  EXPECT_NE(r.out.find("selected_lag=1"), std::string::npos) << r.out;
}

TEST(Analyze, GraphMasksComeFromEdgesInTheWindow) {
  const auto c = small_config();
  const auto g = gp::load_dataset(c).graph;
  const auto& e = g.at(3).edges.front();
  std::vector<std::int64_t> nodes = {e.src, e.dst};
  const auto m = gp::graph_mask(g, nodes, 3, 3);
  EXPECT_EQ(m(0, 1), 1.0);
  EXPECT_EQ(m(1, 0), 1.0);
  EXPECT_EQ(m(0, 0), 1.0);
}

TEST(Analyze, FromCheckpointWithGraphMasks) {
  TempDir dir;
  auto cfg = std::string(kSmall) + "synthetic.steps = 40\n";
  spit(dir / "run.cfg", cfg);
  const auto t = cli({"train", "--config", (dir / "run.cfg").string(), "--out", dir.path().string()});
  ASSERT_EQ(t.code, 0) << t.err;
  const auto a = cli({"analyze", "--config", (dir / "run.cfg").string(), "--out", dir.path().string()});
  ASSERT_EQ(a.code, 0) << a.err;
  const auto report = slurp(dir / gp::kAnalysisReportFile);
  EXPECT_NE(report.find("selected_lag "), std::string::npos);
  EXPECT_NE(report.find("[lag_selection]\nlags\taic\tlambda_precision\tlambda_coefficient\n1\t"), std::string::npos);
  const auto summary = cli({"report", "--out", dir.path().string()});
  ASSERT_EQ(summary.code, 0) << summary.err;
  EXPECT_NE(summary.out.find("[train]"), std::string::npos);
  EXPECT_NE(summary.out.find("[analysis]"), std::string::npos);
  EXPECT_NE(summary.out.find("train_steps 28\n"), std::string::npos) << summary.out;
}

TEST(Analyze, ShortSeriesIsAnError) {
  TempDir dir;
  std::vector<gp::RowScore> scores;
  for (std::size_t t = 1; t <= 8; ++t)
    for (std::int64_t id : {1, 2}) scores.push_back({id, t, 0.1 * static_cast<double>((t * id) % 7), 0});
  std::ostringstream o;
  gp::write_scores(o, scores);
  spit(dir / "s.tsv", o.str());
  const auto r = cli({"analyze", "--scores", (dir / "s.tsv").string(), "--set", "causality.masks=full", "--out",
                      (dir / "out").string()});
  EXPECT_NE(r.code, 0);
  EXPECT_TRUE(is_error_line(r.err)) << r.err;
  EXPECT_NE(r.err.find("kind=data"), std::string::npos);
}

TEST(Cli, ErrorsAreSingleMachineParsableLines) {
  TempDir dir;
  spit(dir / "bad.cfg", "encoder.dim = 30\n");
  const std::vector<std::vector<std::string>> cases = {
      {"train", "--config", (dir / "bad.cfg").string()},
      {"train", "--set", "nope=1"},
      {"train", "--risk-ratio", "2"},
      {"train", "--ablation", "partial"},
      {"train", "--config", (dir / "missing.cfg").string()},
      {"train", "--set", "dataset=missing.csv"},
      {"report", "--out", (dir / "empty").string()},
      {"train", "--no-such-flag"},
      {},
  };
  for (const auto& args : cases) {
    const auto r = cli(args);
    EXPECT_NE(r.code, 0);
    EXPECT_TRUE(is_error_line(r.err)) << r.err;
    EXPECT_TRUE(r.out.empty());
  }
  const auto r = cli({"train", "--config", (dir / "bad.cfg").string()});
  EXPECT_NE(r.err.find("field=encoder.heads"), std::string::npos) << r.err;
  EXPECT_EQ(r.code, gp::kConfig);
}

TEST(Cli, FlagsOverrideConfigFile) {
  TempDir dir;
  spit(dir / "run.cfg", std::string(kSmall) + "seed = 3\nunlabeled_ratio = 0.2\n");
  const auto r = cli({"train", "--config", (dir / "run.cfg").string(), "--seed", "9", "--unlabeled-ratio", "0.4",
                      "--risk-ratio", "0.05", "--epochs", "2", "--ablation", "supervised", "--strict-paper", "--out",
                      (dir / "o").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto config = section(slurp(dir / "o" / gp::kReportFile), "config");
  for (const char* line : {"seed = 9\n", "unlabeled_ratio = 0.4\n", "risk_ratio = 0.05\n", "epochs = 2\n",
                           "ablation = supervised\n", "strict_paper = true\n"})
    EXPECT_NE(config.find(line), std::string::npos) << line;
  EXPECT_TRUE(fs::exists(dir / "o" / gp::kTimingFile));
}

TEST(Cli, IngestWritesAParsableManifest) {
  TempDir dir;
  spit(dir / "run.cfg", kSmall);
  const auto r = cli({"ingest", "--config", (dir / "run.cfg").string(), "--out", dir.path().string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto m = graphshield::graph::parse_manifest(slurp(dir / "manifest.txt"));
  EXPECT_EQ(m.snapshots, 12u);
  EXPECT_EQ(m.edges, 720u);
}

TEST(Cli, SynthOutputIsReadableAsADataset) {
  TempDir dir;
  spit(dir / "run.cfg", kSmall);
  const auto r = cli({"synth", "--config", (dir / "run.cfg").string(), "--out", (dir / "edges.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  auto c = small_config();
  c.dataset = (dir / "edges.csv").string();
  c.frequency = "fixed:604800";
  const auto d = gp::load_dataset(c);
  EXPECT_EQ(d.records, 720u);
  EXPECT_EQ(d.graph.size(), 11u);  // windows start at the first edge; the partial last week is dropped
}

TEST(Cli, SweepWritesTable) {
  TempDir dir;
  spit(dir / "run.cfg", kSmall);
  const auto r = cli({"sweep", "--config", (dir / "run.cfg").string(), "--epochs", "2", "--risk-ratios", "0.1",
                      "--unlabeled-ratios", "0,0.5", "--seeds", "1", "--with-ablation", "--jobs", "2", "--out",
                      dir.path().string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto table = slurp(dir / gp::kSweepTableFile);
  EXPECT_EQ(r.out, table);
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 5);
}
