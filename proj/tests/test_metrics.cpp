#include <gtest/gtest.h>

#include <cmath>

#include "gibconf/metrics.hpp"
#include "metric_fixtures.hpp"

using namespace gibconf;
using testing_support::brute_force_auc;
using testing_support::random_instance;

namespace {

TEST(MetricFixtures, HandComputedValues) {
  for (const auto& f : testing_support::scalar_fixtures()) EXPECT_NEAR(f.got, f.want, 1e-12) << f.name;
}

TEST(RocAuc, MatchesBruteForceOracle) {
  for (std::uint64_t k = 0; k < 100; ++k) {
    const ScoredEdges s = random_instance(k);
    EXPECT_NEAR(roc_auc(s), brute_force_auc(s), 1e-12) << "instance " << k;
  }
}

TEST(RocAuc, InvariantUnderIncreasingTransform) {
  for (std::uint64_t k = 0; k < 20; ++k) {
    ScoredEdges s = random_instance(k), t = s;
    for (double& v : t.scores) v = std::exp(3.0 * v) - 7.0;
    EXPECT_EQ(roc_auc(s), roc_auc(t));
  }
}

TEST(RocAuc, FlippingLabelsComplementsTieFreeScores) {
  for (std::uint64_t k = 0; k < 40; k += 2) {
    ScoredEdges s = random_instance(k), f = s;
    for (auto& l : f.labels) l = 1 - l;
    EXPECT_NEAR(roc_auc(s) + roc_auc(f), 1.0, 1e-12);
  }
}

TEST(RocAuc, SingleClassIsUndefined) {
  EXPECT_THROW(roc_auc(ScoredEdges{{0.1, 0.2}, {1, 1}}), UndefinedMetricError);
  EXPECT_THROW(roc_auc(ScoredEdges{{0.1, 0.2}, {0, 0}}), UndefinedMetricError);
}

TEST(Metrics, LengthMismatchIsDimensionError) {
  EXPECT_THROW(brier(ScoredEdges{{0.1, 0.2}, {1}}), DimensionError);
}

TEST(Metrics, BrierBoundedAndUniformNllExact) {
  for (std::uint64_t k = 0; k < 20; ++k) EXPECT_LE(brier(random_instance(k)), 1.0);
  EXPECT_EQ(nll_binary(ScoredEdges{{0.5, 0.5}, {1, 0}}), std::log(2.0));
}

TEST(Metrics, SingleBinEceIsAccuracyMinusConfidence) {
  for (std::uint64_t k = 0; k < 20; ++k) {
    const ScoredEdges s = random_instance(k);
    double acc = 0.0, conf = 0.0;
    for (std::size_t i = 0; i < s.scores.size(); ++i) {
      acc += ((s.scores[i] >= 0.5 ? 1 : 0) == s.labels[i]) ? 1.0 : 0.0;
      conf += s.scores[i];
    }
    const double n = static_cast<double>(s.scores.size());
    EXPECT_NEAR(ece(s, 1), std::abs(acc / n - conf / n), 1e-12);
  }
}

TEST(Metrics, EceBoundaryJoinsLowerBinExceptTheLast) {
  EXPECT_EQ(ece_bin(0.0, 10), 0u);
  EXPECT_EQ(ece_bin(0.1, 10), 0u);
  EXPECT_EQ(ece_bin(0.5, 2), 0u);
  EXPECT_EQ(ece_bin(1.0, 10), 9u);
  EXPECT_THROW(ece(ScoredEdges{{0.5}, {1}}, 0), ParameterError);
}

TEST(Metrics, PearsonZeroVarianceIsUndefined) {
  EXPECT_THROW(pearson(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), UndefinedMetricError);
  EXPECT_THROW(pearson(std::vector<double>{1}, std::vector<double>{1}), UndefinedMetricError);
}

TEST(Metrics, SpearmanOfMonotoneSequencesIsPlusMinusOne) {
  const std::vector<double> x{0, 0.001, 0.01, 0.05, 0.1, 0.2, 0.5, 1.0};
  std::vector<double> up, down;
  for (double v : x) {
    up.push_back(std::sqrt(v));
    down.push_back(-v * v);
  }
  EXPECT_NEAR(spearman(x, up), 1.0, 1e-12);
  EXPECT_NEAR(spearman(x, down), -1.0, 1e-12);
}

}  // namespace
