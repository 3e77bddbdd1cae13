#include <gtest/gtest.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <zlib.h>

#include "graphshield/graph/bucketing.hpp"
#include "graphshield/graph/edge_csv.hpp"
#include "graphshield/graph/labels.hpp"
#include "graphshield/graph/manifest.hpp"
#include "graphshield/graph/synthetic.hpp"

namespace gg = graphshield::graph;
namespace fs = std::filesystem;
using graphshield::Mat;

namespace {

fs::path write_temp(const std::string& name, const std::string& text) {
  const fs::path p = fs::temp_directory_path() / ("gs_graph_" + name);
  std::ofstream(p) << text;
  return p;
}

std::int64_t epoch(int y, unsigned m, unsigned d) {
  using namespace std::chrono;
  return static_cast<std::int64_t>(sys_days{year{y} / month{m} / day{d}}.time_since_epoch().count()) * 86400;
}

gg::EdgeRecord edge(gg::NodeId s, gg::NodeId d, std::int64_t ts, double w = 1.0) {
  gg::EdgeRecord e;
  e.src = s;
  e.dst = d;
  e.timestamp = ts;
  e.weight = w;
  return e;
}

gg::DynamicGraph small_synthetic(std::uint64_t seed = 3) {
  gg::TrustNetworkSpec spec;
  spec.nodes = 60;
  spec.steps = 8;
  spec.edges_per_step = 50;
  spec.seed = seed;
  return gg::bucket_snapshots(gg::generate_trust_network(spec), {gg::Frequency::Weekly, 0});
}

}  // namespace

TEST(ParseEdgeCsv, BitcoinRowTruncatesTimestamp) {
  const auto p = write_temp("row.csv", "6,2,4,1289241911.72836\n");
  const auto edges = gg::parse_edge_csv(p);
  ASSERT_EQ(edges.size(), 1u);
  EXPECT_EQ(edges[0].src, 6);
  EXPECT_EQ(edges[0].dst, 2);
  EXPECT_EQ(edges[0].weight, 4.0);
  EXPECT_EQ(edges[0].timestamp, 1289241911);
}

TEST(ParseEdgeCsv, EmptyFileGivesEmptyList) {
  EXPECT_TRUE(gg::parse_edge_csv(write_temp("empty.csv", "")).empty());
}

TEST(ParseEdgeCsv, NonNumericRowFailsAtLineOne) {
  try {
    gg::parse_edge_csv(write_temp("bad.csv", "a,b,c,d\n"));
    FAIL() << "expected DataError";
  } catch (const graphshield::DataError& e) {
    EXPECT_EQ(e.line(), 1u);
  }
}

TEST(ParseEdgeCsv, ReportsLineOfLaterMalformedRow) {
  try {
    gg::parse_edge_csv(write_temp("bad3.csv", "1,2,3,100\n2,3,1,200\n3,4,x,300\n"));
    FAIL();
  } catch (const graphshield::DataError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_THROW(gg::parse_edge_csv(write_temp("badts.csv", "1,2,3,yesterday\n")), graphshield::DataError);
}

TEST(ParseEdgeCsv, MissingFileIsAnError) {
  EXPECT_THROW(gg::parse_edge_csv("/nonexistent/edges.csv"), graphshield::DataError);
}

TEST(ParseEdgeCsv, SelfLoopsRejectedUnlessEnabled) {
  const auto p = write_temp("loop.csv", "5,5,1,10\n");
  EXPECT_THROW(gg::parse_edge_csv(p), graphshield::DataError);
  gg::CsvSchema schema;
  schema.allow_self_loops = true;
  EXPECT_EQ(gg::parse_edge_csv(p, schema).size(), 1u);
}

TEST(ParseEdgeCsv, ReadsGzipAndPreservesOrder) {
  const fs::path p = fs::temp_directory_path() / "gs_graph_rows.csv.gz";
  gzFile f = gzopen(p.string().c_str(), "wb");
  const std::string text = "1,2,-3,100\n7,1,10,50.9\n2,7,1,75\n";
  gzwrite(f, text.data(), static_cast<unsigned>(text.size()));
  gzclose(f);
  const auto edges = gg::parse_edge_csv(p);
  ASSERT_EQ(edges.size(), 3u);
  EXPECT_EQ(edges[0].weight, -3.0);
  EXPECT_EQ(edges[1].src, 7);
  EXPECT_EQ(edges[1].timestamp, 50);
  EXPECT_EQ(edges[2].dst, 7);
}

TEST(ParseEdgeCsv, TypedColumns) {
  gg::CsvSchema schema;
  schema.source_type = 4;
  schema.target_type = 5;
  schema.edge_type = 6;
  const auto edges = gg::parse_edge_csv(write_temp("typed.csv", "1,2,3,100,0,1,2\n"), schema);
  EXPECT_EQ(edges[0].src_type, 0);
  EXPECT_EQ(edges[0].dst_type, 1);
  EXPECT_EQ(edges[0].edge_type, 2);
}

TEST(BucketSnapshots, SingleEdgeWeeklyGivesOneSnapshot) {
  const auto g = gg::bucket_snapshots({edge(1, 2, 1289241911)}, {gg::Frequency::Weekly, 0});
  ASSERT_EQ(g.size(), 1u);
  ASSERT_EQ(g.at(1).edges.size(), 1u);
  EXPECT_EQ(g.at(1).edges[0], edge(1, 2, 1289241911));
}

TEST(BucketSnapshots, WeeklyBucketsAreMondayAligned) {
  // 2010-11-08 is a Monday; 2010-11-14 is the Sunday of the same ISO week.
  const auto g = gg::bucket_snapshots({edge(1, 2, epoch(2010, 11, 14) + 3600), edge(2, 3, epoch(2010, 11, 15))},
                                      {gg::Frequency::Weekly, 0});
  ASSERT_EQ(g.size(), 2u);
  EXPECT_EQ(g.at(1).start, epoch(2010, 11, 8));
  EXPECT_EQ(g.at(2).start, epoch(2010, 11, 15));
}

TEST(BucketSnapshots, MonthlyAndQuarterlyBoundaries) {
  const std::vector<gg::EdgeRecord> edges = {edge(1, 2, epoch(2013, 3, 31)), edge(2, 3, epoch(2013, 4, 1)),
                                             edge(3, 1, epoch(2013, 9, 30))};
  const auto monthly = gg::bucket_snapshots(edges, {gg::Frequency::Monthly, 0});
  EXPECT_EQ(monthly.size(), 7u);  // March .. September
  EXPECT_EQ(monthly.at(2).start, epoch(2013, 4, 1));
  const auto quarterly = gg::bucket_snapshots(edges, {gg::Frequency::Quarterly, 0});
  EXPECT_EQ(quarterly.size(), 3u);
  EXPECT_EQ(quarterly.at(1).start, epoch(2013, 1, 1));
  EXPECT_EQ(quarterly.at(2).edges.size(), 1u);
}

TEST(BucketSnapshots, BitcoinSpansGiveKnownStepCounts) {
  // Bitcoin-OTC 11/8/10-1/24/16 -> 95 + 42; Bitcoin-Alpha 11/7/10-1/21/16 -> 95 + 41.
  const gg::BucketSpec fixed{gg::Frequency::Fixed, 1200000};
  EXPECT_EQ(gg::bucket_boundaries(fixed, {epoch(2010, 11, 8), epoch(2016, 1, 24)}).size() - 1, 137u);
  EXPECT_EQ(gg::bucket_boundaries(fixed, {epoch(2010, 11, 7), epoch(2016, 1, 21)}).size() - 1, 136u);
  // Calendar weeks over the same OTC span are roughly twice as many.
  EXPECT_EQ(gg::bucket_boundaries({gg::Frequency::Weekly, 0}, {epoch(2010, 11, 8), epoch(2016, 1, 24)}).size() - 1, 272u);
}

TEST(BucketSnapshots, ErrorCases) {
  EXPECT_THROW(gg::bucket_snapshots({}, {gg::Frequency::Weekly, 0}), graphshield::DataError);
  EXPECT_THROW(gg::bucket_boundaries({gg::Frequency::Weekly, 0}, {100, 50}), graphshield::DataError);
  EXPECT_THROW(gg::bucket_boundaries({gg::Frequency::Fixed, 1000}, {0, 10}), graphshield::DataError);
  EXPECT_THROW(gg::parse_bucket_spec("fortnightly"), graphshield::ConfigError);
  EXPECT_EQ(gg::parse_bucket_spec("fixed:1200000").fixed_seconds, 1200000);
}

TEST(BucketSnapshots, ConservesEdgesAndSortsNeighbors) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    gg::TrustNetworkSpec spec;
    spec.nodes = 40;
    spec.steps = 6;
    spec.edges_per_step = 30;
    spec.seed = seed;
    const auto edges = gg::generate_trust_network(spec);
    const auto g = gg::bucket_snapshots(edges, {gg::Frequency::Weekly, 0});
    EXPECT_EQ(g.total_edges(), edges.size());
    for (const auto& s : g.snapshots()) {
      EXPECT_TRUE(std::is_sorted(s.active.begin(), s.active.end()));
      for (const auto& [type, adj] : s.out_adj)
        for (const auto& l : adj) EXPECT_TRUE(std::is_sorted(l.begin(), l.end()));
      for (const auto& e : s.edges) {
        EXPECT_GE(e.timestamp, s.start);
        EXPECT_LT(e.timestamp, s.end);
      }
    }
  }
}

TEST(BucketSnapshots, RawFeatures) {
  // node 2 receives ratings -3 and 5 in week 1; node 1 rates twice
  const auto g = gg::bucket_snapshots({edge(1, 2, epoch(2010, 11, 8), -3.0), edge(1, 2, epoch(2010, 11, 9), 5.0),
                                       edge(3, 1, epoch(2010, 11, 10), 2.0)},
                                      {gg::Frequency::Weekly, 0});
  const auto& s = g.at(1);
  const std::size_t n2 = *s.local_index(2);
  EXPECT_EQ(s.features(n2, 0), 2.0);   // in-degree
  EXPECT_EQ(s.features(n2, 1), 0.0);   // out-degree
  EXPECT_EQ(s.features(n2, 2), 1.0);   // mean in-rating
  EXPECT_EQ(s.features(n2, 4), -3.0);  // min in-rating
  EXPECT_EQ(s.features(n2, 5), 1.0);   // negative in-ratings
  EXPECT_DOUBLE_EQ(s.features(n2, 6), std::log1p(2.0));
  EXPECT_EQ(s.features(n2, 7), 1.0);
}

TEST(StandardizeFeatures, TrainingRowsAreZeroMeanUnitVariance) {
  const auto g = gg::standardize_features(small_synthetic(), 5);
  for (std::size_t c = 0; c + 1 < gg::kFeatureDim; ++c) {
    double sum = 0, sq = 0, n = 0;
    for (std::size_t t = 1; t <= 5; ++t)
      for (std::size_t i = 0; i < g.at(t).features.rows(); ++i) {
        sum += g.at(t).features(i, c);
        sq += g.at(t).features(i, c) * g.at(t).features(i, c);
        n += 1;
      }
    EXPECT_NEAR(sum / n, 0.0, 1e-9);
    EXPECT_NEAR(sq / n, 1.0, 1e-9);
  }
}

TEST(AdjacencyMatrix, ExamplesAndRoundTrip) {
  const auto g = gg::bucket_snapshots({edge(1, 2, 0), edge(2, 3, 1)}, {gg::Frequency::Weekly, 0});
  const Mat a = gg::adjacency_matrix(g, 1);
  EXPECT_EQ(a, Mat::from_rows({{0, 1, 0}, {0, 0, 1}, {0, 0, 0}}));
  EXPECT_THROW(gg::adjacency_matrix(g, 2), std::out_of_range);
  EXPECT_THROW(gg::adjacency_matrix(g, 0), std::out_of_range);

  const Mat chain = gg::temporal_chain_adjacency(4);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(chain(i, j), j == i + 1 ? 1.0 : 0.0);

  const gg::Snapshot empty = gg::snapshot_from_adjacency(Mat(3, 3), {1, 2, 3});
  const auto ge = gg::DynamicGraph({empty}, {{1, 0}, {2, 0}, {3, 0}});
  EXPECT_EQ(gg::adjacency_matrix(ge, 1), Mat(3, 3));
}

TEST(AdjacencyMatrix, RebuildingFromMatrixIsIdempotent) {
  const auto g = small_synthetic();
  for (const auto& s : g.snapshots()) {
    const Mat a = gg::adjacency_matrix(g, s.index);
    const auto rebuilt = gg::DynamicGraph({gg::snapshot_from_adjacency(a, s.active, s.index)}, g.registry());
    EXPECT_EQ(gg::adjacency_matrix(rebuilt, s.index), a);
  }
}

TEST(TrainTestSplit, Examples) {
  const auto g = gg::bucket_snapshots({edge(1, 2, epoch(2010, 11, 8)), edge(2, 3, epoch(2010, 11, 15))},
                                      {gg::Frequency::Weekly, 0});
  ASSERT_EQ(g.size(), 2u);
  const auto [train, test] = gg::train_test_split(g, 1);
  EXPECT_EQ(train.size(), 1u);
  EXPECT_EQ(test.size(), 1u);
  EXPECT_EQ(test.first_index(), 2u);
  EXPECT_EQ(&train.registry() != &test.registry(), true);
  EXPECT_EQ(train.registry(), test.registry());
  EXPECT_THROW(gg::train_test_split(g, 2), graphshield::ConfigError);
  EXPECT_THROW(gg::train_test_split(g, 0), graphshield::ConfigError);
}

TEST(DeriveLabels, FullyLabeledAtTenPercent) {
  const auto g = small_synthetic();
  const auto labels = gg::derive_labels(g, 0.10, 0.0, 7);
  for (const auto& s : g.snapshots()) {
    const std::size_t n = s.active.size();
    EXPECT_EQ(labels.count(s.index, gg::Label::Unlabeled), 0u);
    const double risky = static_cast<double>(labels.count(s.index, gg::Label::Risky));
    EXPECT_LE(std::abs(risky - 0.10 * static_cast<double>(n)), 1.0);
  }
}

TEST(DeriveLabels, NinetyPercentUnlabeled) {
  const auto g = small_synthetic();
  const auto labels = gg::derive_labels(g, 0.10, 0.9, 7);
  for (const auto& s : g.snapshots()) {
    const double n = static_cast<double>(s.active.size());
    const double labeled = n - static_cast<double>(labels.count(s.index, gg::Label::Unlabeled));
    EXPECT_LE(std::abs(labeled - 0.1 * n), 1.0);
  }
}

TEST(DeriveLabels, DeterministicAndMaskIndependentOfRiskRatio) {
  const auto g = small_synthetic();
  EXPECT_EQ(gg::derive_labels(g, 0.05, 0.4, 11), gg::derive_labels(g, 0.05, 0.4, 11));
  const auto a = gg::derive_labels(g, 0.05, 0.4, 11);
  const auto b = gg::derive_labels(g, 0.30, 0.4, 11);
  for (const auto& s : g.snapshots())
    for (std::size_t i = 0; i < s.active.size(); ++i)
      EXPECT_EQ(a.at(s.index)[i] == gg::Label::Unlabeled, b.at(s.index)[i] == gg::Label::Unlabeled);
}

TEST(DeriveLabels, RiskyAreLowestCumulativeRating) {
  // t=1: node 2 gets -5, node 3 gets +5, node 1 unrated. With 3 active nodes and
  // risk 0.34, exactly one node (2) is risky.
  const auto g = gg::bucket_snapshots({edge(1, 2, 0, -5.0), edge(1, 3, 1, 5.0)}, {gg::Frequency::Weekly, 0});
  const auto labels = gg::derive_labels(g, 0.34, 0.0, 1);
  EXPECT_EQ(labels.label(g, 2, 1), gg::Label::Risky);
  EXPECT_EQ(labels.label(g, 3, 1), gg::Label::Safe);
  EXPECT_EQ(labels.label(g, 1, 1), gg::Label::Safe);
}

TEST(DeriveLabels, TiesGoToLowerId) {
  const auto g = gg::bucket_snapshots({edge(9, 4, 0, -1.0), edge(9, 2, 1, -1.0), edge(9, 6, 2, 3.0)},
                                      {gg::Frequency::Weekly, 0});
  const auto labels = gg::derive_labels(g, 0.25, 0.0, 1);  // 4 active -> 1 risky
  EXPECT_EQ(labels.label(g, 2, 1), gg::Label::Risky);
  EXPECT_EQ(labels.label(g, 4, 1), gg::Label::Safe);
}

TEST(DeriveLabels, RatioValidation) {
  const auto g = small_synthetic();
  EXPECT_THROW(gg::derive_labels(g, 0.0, 0.0, 1), graphshield::ConfigError);
  EXPECT_THROW(gg::derive_labels(g, 1.0, 0.0, 1), graphshield::ConfigError);
  EXPECT_THROW(gg::derive_labels(g, 0.1, 1.0, 1), graphshield::ConfigError);
  EXPECT_THROW(gg::derive_labels(g, 0.1, -0.1, 1), graphshield::ConfigError);
}

TEST(Manifest, FormatsAndParsesBack) {
  const auto g = small_synthetic();
  const gg::BucketSpec spec{gg::Frequency::Weekly, 0};
  const auto text = gg::format_manifest(g, spec);
  const auto m = gg::parse_manifest(text);
  EXPECT_EQ(m.frequency, "weekly");
  EXPECT_EQ(m.snapshots, g.size());
  EXPECT_EQ(m.edges, g.total_edges());
  std::size_t sum = 0;
  for (const auto& b : m.buckets) sum += b.edges;
  EXPECT_EQ(sum, m.edges);
  EXPECT_EQ(m.buckets[2].start, g.at(3).start);
}

// File-level checks against the public datasets; skipped when the files are absent.
TEST(BitcoinData, FilesGiveKnownStepCounts) {
  const char* dir = std::getenv("GRAPHSHIELD_DATA_DIR");
  if (!dir) GTEST_SKIP() << "GRAPHSHIELD_DATA_DIR not set";
  const struct {
    const char* file;
    std::size_t total;
  } cases[] = {{"soc-sign-bitcoinotc.csv", 137}, {"soc-sign-bitcoinalpha.csv", 136}};
  bool any = false;
  for (const auto& c : cases)
    for (const std::string suffix : {"", ".gz"}) {
      const fs::path p = fs::path(dir) / (std::string(c.file) + suffix);
      if (!fs::exists(p)) continue;
      any = true;
      const auto edges = gg::parse_edge_csv(p);
      const auto g = gg::bucket_snapshots(edges, {gg::Frequency::Fixed, 1200000});
      EXPECT_EQ(g.size(), c.total) << p;
      const auto [train, test] = gg::train_test_split(g, 95);
      EXPECT_EQ(train.size() + test.size(), c.total);
    }
  if (!any) GTEST_SKIP() << "no Bitcoin files in " << dir;
}
