#include <gtest/gtest.h>

#include <cmath>

#include "gibconf/confidence.hpp"
#include "gibconf/losses.hpp"
#include "support.hpp"

using namespace gibconf;
using testing_support::fd_relative_error;
using testing_support::six_node_graph;

namespace {

ConfidenceParams zero_confidence(std::size_t h) {
  Rng rng(0);
  ConfidenceParams p = init_confidence(h, rng);
  for (Matrix* m : {&p.w1, &p.b1, &p.w2, &p.b2}) *m = Matrix(m->rows(), m->cols());
  return p;
}

TEST(ConfidenceForward, ZeroParametersGiveHalf) {
  ConfidenceScores c = confidence_forward(zero_confidence(2), Matrix(3, 4, 0.7), EdgeMask{{0.1, 0.5, 0.9}});
  EXPECT_EQ(c.per_edge, std::vector<double>(3, 0.5));
  EXPECT_EQ(c.graph_confidence, 0.5);
}

TEST(ConfidenceForward, RawScoreLnThreeGivesThreeQuarters) {
  ConfidenceParams p = zero_confidence(2);
  p.b2 = Matrix(1, 1, std::log(3.0));
  ConfidenceScores c = confidence_forward(p, Matrix(2, 4, -0.2), EdgeMask{{0.3, 0.4}});
  for (double v : c.per_edge) EXPECT_NEAR(v, 0.75, 1e-15);
}

TEST(ConfidenceForward, LengthMismatchIsDimensionError) {
  EXPECT_THROW(confidence_forward(zero_confidence(2), Matrix(3, 4), EdgeMask{{0.5, 0.5}}), DimensionError);
}

TEST(ConfidenceForward, ConfidencesStayInsideOpenInterval) {
  Rng rng(3);
  ConfidenceParams p = init_confidence(2, rng);
  p.b2 = Matrix(1, 1, 80.0);
  for (double v : confidence_forward(p, Matrix(4, 4, 1.0), EdgeMask{std::vector<double>(4, 0.5)}).per_edge)
    EXPECT_LT(v, 1.0);
  p.b2 = Matrix(1, 1, -80.0);
  for (double v : confidence_forward(p, Matrix(4, 4, 1.0), EdgeMask{std::vector<double>(4, 0.5)}).per_edge)
    EXPECT_GT(v, 0.0);
}

TEST(CalibrateMask, FullConfidenceReproducesMaskExactly) {
  EdgeMask m{{0.1234567, 0.5, 0.987654321, 1e-12}};
  auto cal = calibrate_mask(m, std::vector<double>(4, 1.0), 7);
  EXPECT_EQ(cal.weights, m.weights);
}

TEST(CalibrateMask, ZeroConfidenceReproducesNoiseExactly) {
  EdgeMask m{{0.1, 0.2, 0.3}};
  auto cal = calibrate_mask(m, std::vector<double>(3, 0.0), 7);
  EXPECT_EQ(cal.weights, cal.noise);
  EXPECT_EQ(cal.noise, calibrate_mask(m, std::vector<double>(3, 0.0), 7).noise);
}

TEST(CalibrateMask, ExpectationIsConfidenceTimesMask) {
  EdgeMask m{{0.9, 0.2}};
  const std::vector<double> c{0.7, 0.4};
  double sum0 = 0.0, sum1 = 0.0;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    auto cal = calibrate_mask(m, c, seed);
    sum0 += cal.weights[0];
    sum1 += cal.weights[1];
  }
  EXPECT_NEAR(sum0 / 1e4, 0.63, 0.03);
  EXPECT_NEAR(sum1 / 1e4, 0.08, 0.03);
}

TEST(CalibrateMask, TapeVersionWithUnitConfidenceIsBitExact) {
  Tape t;
  const Matrix m = Matrix{{0.31}, {0.77}, {0.5}};
  Var out = calibrate_mask(t, t.constant(m), t.constant(Matrix(3, 1, 1.0)), Matrix{{5.0}, {-2.0}, {0.3}});
  EXPECT_EQ(t.value(out), m);
}

TEST(CalibrateMask, LengthMismatchIsDimensionError) {
  EXPECT_THROW(calibrate_mask(EdgeMask{{0.5, 0.5}}, std::vector<double>(3, 1.0), 0), DimensionError);
}

TEST(TruePredictionMask, SignAndTieRule) {
  EXPECT_EQ(true_prediction_mask(std::vector<double>{0.9, 0.1}, 0), 1);
  EXPECT_EQ(true_prediction_mask(std::vector<double>{0.9, 0.1}, 1), -1);
  EXPECT_EQ(true_prediction_mask(std::vector<double>{0.5, 0.5}, 0), 1);
  EXPECT_EQ(true_prediction_mask(std::vector<double>{0.5, 0.5}, 1), -1);
}

TEST(ConfidenceLoss, HandEvaluatedExamples) {
  const std::vector<double> c(4, 0.5);
  EXPECT_NEAR(confidence_loss(c, std::vector<double>{0.6, 0.4}, 0, 1.0), 0.08, 1e-15);
  EXPECT_NEAR(confidence_loss(c, std::vector<double>{0.4, 0.6}, 0, 1.0), -0.5 * 0.36, 1e-15);
  EXPECT_NEAR(confidence_loss(c, std::vector<double>{0.6, 0.4}, 1, 1.0), -0.18, 1e-15);
  // Same true-class probability on both sides of the argmax: only the sign changes.
  EXPECT_NEAR(confidence_loss(c, std::vector<double>{0.4, 0.3, 0.3}, 0, 1.0), 0.18, 1e-15);
  EXPECT_NEAR(confidence_loss(c, std::vector<double>{0.5, 0.4, 0.1}, 1, 1.0), -0.18, 1e-15);
  EXPECT_EQ(confidence_loss(c, std::vector<double>{1.0, 0.0}, 0, 3.0), 0.0);
}

TEST(ConfidenceLoss, SignStructureInMeanConfidence) {
  const std::vector<double> right{0.7, 0.3}, wrong{0.3, 0.7};
  double prev_right = -INFINITY, prev_wrong = INFINITY;
  for (double level : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    const std::vector<double> c(5, level);
    const double lr = confidence_loss(c, right, 0, 2.0), lw = confidence_loss(c, wrong, 0, 2.0);
    EXPECT_GT(lr, prev_right);
    EXPECT_LT(lw, prev_wrong);
    prev_right = lr;
    prev_wrong = lw;
  }
}

TEST(ConfidenceLoss, TapeAndPlainVersionsAgree) {
  Tape t;
  const std::vector<double> c{0.2, 0.9, 0.6};
  Var loss = confidence_loss(t, t.constant(Matrix::column(c)), t.constant(Matrix{{0.35, 0.65}}), 1, 1.5);
  EXPECT_NEAR(t.scalar(loss), confidence_loss(c, std::vector<double>{0.35, 0.65}, 1, 1.5), 1e-15);
}

TEST(ConfidenceLoss, BadLabelIsIndexError) {
  EXPECT_THROW(confidence_loss(std::vector<double>{0.5}, std::vector<double>{0.5, 0.5}, 2, 1.0), IndexError);
}

TEST(GraphConfidence, MeanOfEdgesAndPermutationInvariant) {
  EXPECT_DOUBLE_EQ(graph_confidence(std::vector<double>(3, 0.8)), 0.8);
  EXPECT_NEAR(graph_confidence(std::vector<double>{0.2, 0.6}), 0.4, 1e-15);
  EXPECT_NEAR(graph_confidence(std::vector<double>{0.5, 0.1, 0.25}),
              graph_confidence(std::vector<double>{0.1, 0.25, 0.5}), 1e-15);
  EXPECT_THROW(graph_confidence(std::vector<double>{}), ContractError);
}

// Confidence parameters through calibration, the masked GCN and the confidence loss.
TEST(ConfidenceLoss, GradientMatchesFiniteDifferences) {
  Graph g = six_node_graph();
  Rng rng(11);
  GcnParams f = init_gcn(4, 20, 2, rng);
  ConfidenceParams p = init_confidence(20, rng);
  const Matrix rows = edge_inputs(gcn_forward(f, g).z, g.edges);
  const Matrix mask = Matrix{{0.9}, {0.2}, {0.6}, {0.7}, {0.4}, {0.8}, {0.3}};
  const Matrix noise = gaussian_sample(g.num_edges(), 1, 5);
  for (std::size_t label : {0u, 1u}) {
    auto build = [&](Tape& t, const std::vector<Var>& v) {
      MlpVars mv;
      for (std::size_t k = 0; k < 4; ++k) mv.v[k] = v[k];
      Var m = t.constant(mask);
      Var c = confidence_forward(t, mv, t.constant(rows), m);
      Var w = calibrate_mask(t, m, c, noise);
      Var adj = t.normalized_adjacency(w, g.edges, g.n);
      Var probs = t.softmax(gcn_forward(t, bind(t, f, false), t.constant(g.features), adj).logits);
      return confidence_loss(t, c, probs, label, 1.0);
    };
    EXPECT_LT(fd_relative_error(build, {p.w1, p.b1, p.w2, p.b2}), 1e-4) << label;
  }
}

TEST(ConfidenceCheckpoint, RoundTripIsLossless) {
  Rng rng(2);
  ConfidenceParams p = init_confidence(20, rng);
  const auto path = std::filesystem::temp_directory_path() / "gibconf_test_conf.json";
  save_confidence(p, path);
  ConfidenceParams q = load_confidence(path);
  EXPECT_EQ(q.w1, p.w1);
  EXPECT_EQ(q.b2, p.b2);
  EXPECT_THROW(load_explainer(path), Error);
  std::filesystem::remove(path);
}

}  // namespace
