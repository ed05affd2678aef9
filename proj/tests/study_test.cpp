// Comparison-matrix and threshold-sweep behavior.

#include "eecn/study.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace eecn;

namespace {

ScenarioConfig tiny() {
  ScenarioConfig cfg;
  cfg.name = "tiny";
  cfg.seed = 9;
  cfg.duration = from_millis(5000);
  cfg.bottleneck = {1e7, from_millis(1)};
  FlowSpec f;
  f.algo = CcAlgo::Eecn;
  f.src = "c1";
  f.dst = "s1";
  f.size_bytes = 30'000;
  cfg.flows = {f};
  return cfg;
}

TEST(Compare, RowsInDeclarationOrderWithSharedSeed) {
  const auto result = run_compare(
      tiny(), {CcAlgo::NewReno, CcAlgo::Eecn, CcAlgo::NewRenoEcn});
  ASSERT_EQ(result.rows.size(), 3u);
  EXPECT_EQ(result.rows[0].algo, CcAlgo::NewReno);
  EXPECT_EQ(result.rows[1].algo, CcAlgo::Eecn);
  EXPECT_EQ(result.rows[2].algo, CcAlgo::NewRenoEcn);
  for (const auto& row : result.rows) {
    EXPECT_EQ(row.report.seed, 9u);  // one shared seed across the matrix
    EXPECT_TRUE(row.report.flows.at(0).completed);
  }
}

TEST(Compare, SingleAlgorithmHasNoReductions) {
  const auto result = run_compare(tiny(), {CcAlgo::Eecn});
  ASSERT_EQ(result.rows.size(), 1u);
  const auto j = compare_to_json(result);
  EXPECT_FALSE(j.contains("reductions_vs_eecn"));
}

TEST(Compare, ReductionConvention) {
  EXPECT_DOUBLE_EQ(reduction_pct(100.0, 30.0), 70.0);  // (baseline-x)/baseline
  EXPECT_DOUBLE_EQ(reduction_pct(0.0, 5.0), 0.0);      // guarded baseline
}

TEST(Sweep, RejectsUnorderedPair) {
  EXPECT_THROW(run_sweep(tiny(), {{0.5, 0.3}}), ConfigError);
}

TEST(Sweep, EmptyPairListGivesEmptyTable) {
  const auto result = run_sweep(tiny(), {});
  EXPECT_TRUE(result.rows.empty());
  std::ostringstream os;
  sweep_to_csv(result, os);
  EXPECT_EQ(os.str().find("th1,th2"), 0u);  // header only
}

TEST(Sweep, RowShape) {
  const auto result = run_sweep(tiny(), {{0.3, 0.5}});
  ASSERT_EQ(result.rows.size(), 1u);
  EXPECT_DOUBLE_EQ(result.rows[0].th1, 0.3);
  EXPECT_DOUBLE_EQ(result.rows[0].th2, 0.5);
  EXPECT_GT(result.rows[0].sf_throughput_bps, 0.0);
}

}  // namespace
