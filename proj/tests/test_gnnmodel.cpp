#include <gtest/gtest.h>

#include <filesystem>
#include <numeric>

#include "gibconf/gcn.hpp"
#include "gibconf/generator.hpp"
#include "support.hpp"

using namespace gibconf;
using testing_support::max_abs_diff;
using testing_support::six_node_graph;

namespace {

GcnParams random_gcn(std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  return init_gcn(d, 20, 2, rng);
}

Graph permuted(const Graph& g, const std::vector<std::size_t>& perm) {
  Graph out;
  out.n = g.n;
  out.features = Matrix(g.n, g.features.cols());
  for (std::size_t i = 0; i < g.n; ++i)
    for (std::size_t c = 0; c < g.features.cols(); ++c) out.features(perm[i], c) = g.features(i, c);
  for (const Edge& e : g.edges) out.add_edge(perm[e.u], perm[e.v]);
  return out;
}

TEST(NormalizeAdjacency, AllZeroWeightsGiveIdentity) {
  Graph g = six_node_graph();
  const std::vector<double> zeros(g.num_edges(), 0.0);
  Matrix a = normalize_adjacency(g, std::span<const double>(zeros));
  Matrix eye(6, 6);
  for (std::size_t i = 0; i < 6; ++i) eye(i, i) = 1.0;
  EXPECT_EQ(a, eye);
}

TEST(NormalizeAdjacency, UnitWeightsEqualUnweighted) {
  Graph g = six_node_graph();
  const std::vector<double> ones(g.num_edges(), 1.0);
  EXPECT_EQ(normalize_adjacency(g, std::span<const double>(ones)), normalize_adjacency(g));
}

// Oracle: entries (A+I)_ij / sqrt(d_i d_j) from an explicitly built dense matrix.
TEST(NormalizeAdjacency, MatchesDenseOracleWithWeights) {
  Graph g = six_node_graph();
  const std::vector<double> w{0.3, 1.0, 0.7, 0.0, 2.0, 0.5, 0.9};
  Matrix a(6, 6);
  for (std::size_t i = 0; i < 6; ++i) a(i, i) = 1.0;
  for (std::size_t e = 0; e < w.size(); ++e) {
    a(g.edges[e].u, g.edges[e].v) = w[e];
    a(g.edges[e].v, g.edges[e].u) = w[e];
  }
  std::vector<double> deg(6, 0.0);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) deg[i] += a(i, j);
  Matrix oracle(6, 6);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) oracle(i, j) = a(i, j) / std::sqrt(deg[i] * deg[j]);
  EXPECT_LT(max_abs_diff(normalize_adjacency(g, std::span<const double>(w)), oracle), 1e-15);
}

TEST(NormalizeAdjacency, WrongWeightCountIsDimensionError) {
  Graph g = six_node_graph();
  const std::vector<double> w(3, 1.0);
  EXPECT_THROW(normalize_adjacency(g, std::span<const double>(w)), DimensionError);
}

TEST(GcnForward, ProbabilitiesSumToOneAndShapesFollowGraph) {
  Graph g = six_node_graph();
  auto r = gcn_forward(random_gcn(4, 1), g);
  EXPECT_EQ(r.z.rows(), 6u);
  EXPECT_EQ(r.z.cols(), 20u);
  EXPECT_NEAR(r.probs[0] + r.probs[1], 1.0, 1e-9);
}

TEST(GcnForward, UnitWeightsReproduceUnmaskedResult) {
  Graph g = six_node_graph();
  GcnParams p = random_gcn(4, 2);
  const std::vector<double> ones(g.num_edges(), 1.0);
  EXPECT_EQ(gcn_forward(p, g, std::span<const double>(ones)).logits, gcn_forward(p, g).logits);
}

// With every edge weight 0 the graph behaves as if it had no edges at all.
TEST(GcnForward, ZeroWeightsEqualEdgelessGraph) {
  Graph g = six_node_graph();
  GcnParams p = random_gcn(4, 3);
  const std::vector<double> zeros(g.num_edges(), 0.0);
  Graph bare = g;
  bare.edges.clear();
  EXPECT_EQ(gcn_forward(p, g, std::span<const double>(zeros)).logits, gcn_forward(p, bare).logits);
}

TEST(GcnForward, NodePermutationLeavesLogitsUnchanged) {
  Graph g = six_node_graph();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    GcnParams p = random_gcn(4, seed);
    std::vector<std::size_t> perm(6);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(seed + 100);
    std::shuffle(perm.begin(), perm.end(), rng.engine());
    EXPECT_LT(max_abs_diff(gcn_forward(p, g).logits, gcn_forward(p, permuted(g, perm)).logits), 1e-9);
  }
}

TEST(GcnForward, FeatureWidthMismatchIsDimensionError) {
  EXPECT_THROW(gcn_forward(random_gcn(3, 0), six_node_graph(4)), DimensionError);
}

TEST(GcnForward, ZeroingEdgesChangesOutputOnMostGeneratedGraphs) {
  const auto& fx = testing_support::small_fixture();
  std::size_t differ = 0;
  for (const auto& lg : fx.data.graphs) {
    const std::vector<double> zeros(lg.graph.num_edges(), 0.0);
    if (gcn_forward(fx.model, lg.graph).logits !=
        gcn_forward(fx.model, lg.graph, std::span<const double>(zeros)).logits)
      ++differ;
  }
  EXPECT_GE(static_cast<double>(differ), 0.9 * static_cast<double>(fx.data.graphs.size()));
}

TEST(GcnForward, LossGradientMatchesFiniteDifferences) {
  Graph g = six_node_graph();
  GcnParams p = random_gcn(4, 7);
  const std::vector<double> w{0.3, 1.0, 0.7, 0.2, 0.9, 0.5, 0.6};
  std::vector<Matrix> params;
  for (const Matrix* m : p.tensors()) params.push_back(*m);
  params.push_back(Matrix::column(w));
  auto build = [&](Tape& t, const std::vector<Var>& v) {
    GcnVars gv;
    for (std::size_t k = 0; k < 8; ++k) gv.v[k] = v[k];
    Var adj = t.normalized_adjacency(v[8], g.edges, g.n);
    return t.softmax_cross_entropy(gcn_forward(t, gv, t.constant(g.features), adj).logits, 1);
  };
  EXPECT_LT(testing_support::fd_relative_error(build, params), 1e-4);
}

TEST(Accuracy, FlippedLabelsGiveComplement) {
  const auto& fx = testing_support::small_fixture();
  std::vector<LabeledGraph> flipped = fx.data.graphs;
  for (auto& lg : flipped) lg.label = 1 - lg.label;
  EXPECT_DOUBLE_EQ(accuracy(fx.model, flipped), 1.0 - accuracy(fx.model, fx.data.graphs));
}

TEST(Accuracy, EdgelessGraphIsScored) {
  GcnParams p = random_gcn(4, 1);
  LabeledGraph lg;
  lg.graph.n = 3;
  lg.graph.features = Matrix(3, 4, 0.5);
  lg.label = predict(p, lg.graph);
  EXPECT_EQ(accuracy(p, std::vector<LabeledGraph>{lg}), 1.0);
}

TEST(TrainGnn, ReachesGateOnDefaultDataset) {
  Dataset d = generate_dataset(DatasetConfig{}, 0);
  auto r = train_gnn(d, GnnTrainConfig{}, 0);
  ASSERT_EQ(r.loss_history.size(), 100u);
  for (double l : r.loss_history) EXPECT_TRUE(std::isfinite(l));
  EXPECT_LT(r.loss_history.back(), r.loss_history.front());
  EXPECT_GE(accuracy(r.params, select(d, d.test)), 0.95);
}

TEST(TrainGnn, SameSeedSameParameters) {
  DatasetConfig cfg;
  cfg.num_graphs = 40;
  Dataset d = generate_dataset(cfg, 1);
  GnnTrainConfig g;
  g.epochs = 3;
  EXPECT_EQ(train_gnn(d, g, 4).params, train_gnn(d, g, 4).params);
}

TEST(TrainGnn, EmptyTrainSplitIsContractError) {
  Dataset d;
  d.feature_dim = 4;
  EXPECT_THROW(train_gnn(d, GnnTrainConfig{}, 0), ContractError);
}

TEST(GcnCheckpoint, RoundTripIsLossless) {
  GcnParams p = random_gcn(10, 12);
  const auto path = std::filesystem::temp_directory_path() / "gibconf_test_gcn.json";
  save_gcn(p, path);
  EXPECT_EQ(load_gcn(path), p);
  std::filesystem::remove(path);
}

TEST(GcnCheckpoint, WrongSchemaIsRejected) {
  std::string text = serialize_gcn(random_gcn(2, 1));
  text.replace(text.find("gibconf-gcn/1"), 13, "gibconf-gcn/9");
  EXPECT_THROW(parse_gcn(text), Error);
}

}  // namespace
