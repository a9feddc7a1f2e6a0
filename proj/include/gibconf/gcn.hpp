#pragma once

// The model under explanation: three GCN layers over a symmetric-normalized
// weighted adjacency, mean pooling, and a linear classifier.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gibconf/adam.hpp"
#include "gibconf/checkpoint.hpp"
#include "gibconf/graph.hpp"
#include "gibconf/rng.hpp"
#include "gibconf/tape.hpp"

namespace gibconf {

/// Glorot-uniform initialised weight matrix.
inline Matrix glorot(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Matrix m(fan_in, fan_out);
  for (double& v : m.values()) v = (2.0 * rng.uniform() - 1.0) * limit;
  return m;
}

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) bias row. Zero biases would keep every
/// layer rank one on constant node features.
inline Matrix fan_in_bias(std::size_t fan_in, std::size_t width, Rng& rng) {
  const double limit = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Matrix m(1, width);
  for (double& v : m.values()) v = (2.0 * rng.uniform() - 1.0) * limit;
  return m;
}

struct GcnParams {
  std::size_t feature_dim = 0;
  std::size_t hidden = 20;
  std::size_t num_classes = 2;
  Matrix w1, b1, w2, b2, w3, b3, wout, bout;

  std::array<Matrix*, 8> tensors() { return {&w1, &b1, &w2, &b2, &w3, &b3, &wout, &bout}; }
  std::array<const Matrix*, 8> tensors() const {
    return {&w1, &b1, &w2, &b2, &w3, &b3, &wout, &bout};
  }
  static constexpr std::array<const char*, 8> kNames = {"w1", "b1", "w2", "b2",
                                                        "w3", "b3", "wout", "bout"};

  bool all_finite() const {
    for (const Matrix* m : tensors())
      if (!m->all_finite()) return false;
    return true;
  }

  friend bool operator==(const GcnParams&, const GcnParams&) = default;
};

inline GcnParams init_gcn(std::size_t feature_dim, std::size_t hidden, std::size_t num_classes,
                          Rng& rng) {
  GcnParams p;
  p.feature_dim = feature_dim;
  p.hidden = hidden;
  p.num_classes = num_classes;
  p.w1 = glorot(feature_dim, hidden, rng);
  p.b1 = fan_in_bias(feature_dim, hidden, rng);
  p.w2 = glorot(hidden, hidden, rng);
  p.b2 = fan_in_bias(hidden, hidden, rng);
  p.w3 = glorot(hidden, hidden, rng);
  p.b3 = fan_in_bias(hidden, hidden, rng);
  p.wout = glorot(hidden, num_classes, rng);
  p.bout = fan_in_bias(hidden, num_classes, rng);
  return p;
}

/// Tape leaves for one parameter bundle.
struct GcnVars {
  std::array<Var, 8> v;
  Var w1() const { return v[0]; }
  Var b1() const { return v[1]; }
  Var w2() const { return v[2]; }
  Var b2() const { return v[3]; }
  Var w3() const { return v[4]; }
  Var b3() const { return v[5]; }
  Var wout() const { return v[6]; }
  Var bout() const { return v[7]; }
};

inline GcnVars bind(Tape& tape, const GcnParams& p, bool trainable) {
  GcnVars out;
  auto t = p.tensors();
  for (std::size_t k = 0; k < t.size(); ++k)
    out.v[k] = trainable ? tape.variable(*t[k]) : tape.constant(*t[k]);
  return out;
}

struct GcnForwardVars {
  Var z;        // n x h node embeddings
  Var h_graph;  // 1 x h pooled embedding
  Var logits;   // 1 x num_classes
};

inline GcnForwardVars gcn_forward(Tape& tape, const GcnVars& p, Var features, Var adjacency) {
  auto layer = [&](Var h, Var w, Var b) {
    return tape.relu(tape.add_row(tape.matmul(tape.matmul(adjacency, h), w), b));
  };
  Var z1 = layer(features, p.w1(), p.b1());
  Var z2 = layer(z1, p.w2(), p.b2());
  Var z3 = layer(z2, p.w3(), p.b3());
  Var pooled = tape.mean_rows(z3);
  Var logits = tape.add_row(tape.matmul(pooled, p.wout()), p.bout());
  return {z3, pooled, logits};
}

/// Edge weights default to the graph's own weights, then to 1.
inline std::vector<double> effective_weights(const Graph& g,
                                             std::optional<std::span<const double>> weights) {
  if (weights) {
    if (weights->size() != g.num_edges()) {
      throw DimensionError("edge weight count " + std::to_string(weights->size()) +
                           " does not match edge count " + std::to_string(g.num_edges()));
    }
    return {weights->begin(), weights->end()};
  }
  if (g.edge_weights) return *g.edge_weights;
  return std::vector<double>(g.num_edges(), 1.0);
}

/// D^{-1/2}(A+I)D^{-1/2} with A built from per-edge weights (1 when absent).
inline Matrix normalize_adjacency(const Graph& g,
                                  std::optional<std::span<const double>> weights = std::nullopt) {
  Tape tape;
  auto w = effective_weights(g, weights);
  Var wv = tape.constant(Matrix::column(w));
  return tape.value(tape.normalized_adjacency(wv, g.edges, g.n));
}

struct ForwardResult {
  Matrix z;
  Matrix h_graph;
  Matrix logits;
  Matrix probs;
};

inline void check_features(const GcnParams& p, const Graph& g) {
  if (g.features.cols() != p.feature_dim || g.features.rows() != g.n) {
    throw DimensionError("graph features " + g.features.shape_string() +
                         " do not fit a model with feature_dim " + std::to_string(p.feature_dim));
  }
}

inline ForwardResult gcn_forward(const GcnParams& p, const Graph& g,
                                 std::optional<std::span<const double>> weights = std::nullopt) {
  check_features(p, g);
  Tape tape;
  GcnVars vars = bind(tape, p, false);
  auto w = effective_weights(g, weights);
  Var adj = tape.normalized_adjacency(tape.constant(Matrix::column(w)), g.edges, g.n);
  auto out = gcn_forward(tape, vars, tape.constant(g.features), adj);
  Var probs = tape.softmax(out.logits);
  return {tape.value(out.z), tape.value(out.h_graph), tape.value(out.logits), tape.value(probs)};
}

/// Index of the largest entry; ties go to the lower index.
inline std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

inline std::size_t predict(const GcnParams& p, const Graph& g) {
  return argmax(gcn_forward(p, g).logits.values());
}

inline double accuracy(const GcnParams& p, std::span<const LabeledGraph> graphs) {
  if (graphs.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& lg : graphs)
    if (predict(p, lg.graph) == lg.label) ++correct;
  return static_cast<double>(correct) / static_cast<double>(graphs.size());
}

struct GnnTrainConfig {
  std::size_t epochs = 100;
  double lr = 0.005;
  std::size_t hidden = 20;
};

struct GnnTrainResult {
  GcnParams params;
  std::vector<double> loss_history;
};

/// Cross-entropy training with one Adam step per graph, order reshuffled each epoch.
inline GnnTrainResult train_gnn(const Dataset& d, const GnnTrainConfig& cfg, std::uint64_t seed) {
  if (d.train.empty()) throw ContractError("train_gnn: the train split is empty");
  const Rng root(seed);
  Rng init_rng = root.split(0);
  GcnParams p = init_gcn(d.feature_dim, cfg.hidden, d.num_classes, init_rng);
  auto tensors = p.tensors();
  OptimizerState state = make_optimizer_state(tensors);

  // Normalized adjacency of every training graph is fixed; build it once.
  std::vector<Matrix> adjacency;
  adjacency.reserve(d.train.size());
  for (auto idx : d.train) {
    check_features(p, d.graphs[idx].graph);
    adjacency.push_back(normalize_adjacency(d.graphs[idx].graph));
  }

  std::vector<std::size_t> order(d.train.size());
  std::vector<double> history;
  std::vector<Matrix> grads(tensors.size());
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng = root.split({1, epoch});
    std::shuffle(order.begin(), order.end(), shuffle_rng.engine());
    double total = 0.0;
    for (std::size_t k : order) {
      const LabeledGraph& lg = d.graphs[d.train[k]];
      Tape tape;
      GcnVars vars = bind(tape, p, true);
      auto out = gcn_forward(tape, vars, tape.constant(lg.graph.features), tape.constant(adjacency[k]));
      Var loss = tape.softmax_cross_entropy(out.logits, lg.label);
      tape.backward(loss);
      total += tape.scalar(loss);
      for (std::size_t t = 0; t < tensors.size(); ++t) grads[t] = tape.grad(vars.v[t]);
      adam_step(tensors, grads, state, cfg.lr);
    }
    history.push_back(total / static_cast<double>(order.size()));
  }
  return {std::move(p), std::move(history)};
}

inline constexpr const char* kGcnSchema = "gibconf-gcn/1";

inline std::string serialize_gcn(const GcnParams& p) {
  NamedTensors t;
  auto ts = p.tensors();
  for (std::size_t k = 0; k < ts.size(); ++k) t.emplace_back(GcnParams::kNames[k], *ts[k]);
  nlohmann::json shape = {
      {"feature_dim", p.feature_dim}, {"hidden", p.hidden}, {"num_classes", p.num_classes}};
  return serialize_checkpoint(kGcnSchema, shape, t);
}

inline GcnParams parse_gcn(const std::string& text) {
  auto c = parse_checkpoint(text, kGcnSchema);
  GcnParams p;
  try {
    p.feature_dim = c.shape.at("feature_dim").get<std::size_t>();
    p.hidden = c.shape.at("hidden").get<std::size_t>();
    p.num_classes = c.shape.at("num_classes").get<std::size_t>();
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError(0, std::string("gcn checkpoint shape: ") + ex.what());
  }
  const std::size_t d = p.feature_dim, h = p.hidden, k = p.num_classes;
  const std::array<std::pair<std::size_t, std::size_t>, 8> shapes = {
      {{d, h}, {1, h}, {h, h}, {1, h}, {h, h}, {1, h}, {h, k}, {1, k}}};
  auto ts = p.tensors();
  for (std::size_t i = 0; i < ts.size(); ++i)
    *ts[i] = checkpoint_tensor(c, GcnParams::kNames[i], shapes[i].first, shapes[i].second);
  return p;
}

inline void save_gcn(const GcnParams& p, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_gcn(p));
}
inline GcnParams load_gcn(const std::filesystem::path& path) { return parse_gcn(read_file(path)); }

}  // namespace gibconf
