#pragma once

// Joint training of the explainer and the confidence model. Epochs alternate:
// even epochs update only the explainer, odd epochs only the confidence model.
// train_vanilla_explainer() is the confidence-free baseline; it draws the same
// per-round randomness as the explainer phase of the joint trainer.

#include <algorithm>
#include <chrono>
#include <functional>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "gibconf/adam.hpp"
#include "gibconf/confidence.hpp"
#include "gibconf/explainer.hpp"
#include "gibconf/gcn.hpp"
#include "gibconf/graph.hpp"
#include "gibconf/losses.hpp"
#include "gibconf/rng.hpp"

namespace gibconf {

struct TrainConfig {
  /// Explainer epochs; the joint trainer runs twice as many.
  std::size_t epochs = 30;
  double lr = 0.005;
  double alpha = 1.0;
  double size_coeff = 0.0003;
  double entropy_coeff = 0.3;
  double lambda = 100.0;
  double beta = 1.0;
  std::uint64_t seed = 0;
  double tau0 = 5.0;
  double tau_final = 2.0;
  std::size_t bins = 10;

  LossWeights weights() const { return {alpha, size_coeff, entropy_coeff}; }
  TemperatureSchedule schedule() const { return {tau0, tau_final, epochs}; }

  void validate() const {
    if (epochs < 1) throw ParameterError("epochs must be at least 1");
    if (!(lr > 0.0)) throw ParameterError("lr must be positive");
    if (alpha < 0 || size_coeff < 0 || entropy_coeff < 0 || lambda < 0 || beta < 0) {
      throw ParameterError("loss coefficients must be non-negative");
    }
    if (!(tau0 >= tau_final && tau_final > 0.0)) throw ParameterError("need tau0 >= tauT > 0");
    if (bins < 1) throw ParameterError("bins must be at least 1");
  }
};

enum class ConfidenceMode {
  Learned,
  /// C == 1 on every edge; the confidence model is never evaluated or updated.
  ForcedOne,
};

enum class Phase : std::uint64_t { Explainer = 0, Confidence = 1 };

struct EpochLoss {
  std::size_t epoch = 0;
  Phase phase = Phase::Explainer;
  double gib = 0.0;
  double conf = 0.0;
  double total = 0.0;
};

/// Explainer inputs for one graph, computed once from the frozen model on the clean graph.
struct GraphContext {
  const Graph* graph = nullptr;
  std::size_t label = 0;
  Matrix edge_rows;
};

inline GraphContext make_context(const GcnParams& f, const LabeledGraph& lg) {
  auto fwd = gcn_forward(f, lg.graph);
  return {&lg.graph, lg.label, edge_inputs(fwd.z, lg.graph.edges)};
}

inline std::vector<GraphContext> make_contexts(const GcnParams& f, std::span<const LabeledGraph> graphs) {
  std::vector<GraphContext> out;
  out.reserve(graphs.size());
  for (const auto& lg : graphs) out.push_back(make_context(f, lg));
  return out;
}

namespace detail {

enum StreamKey : std::uint64_t { kShuffle = 11, kConcrete = 12, kGaussian = 13, kInit = 14 };

inline std::vector<std::size_t> round_order(const Rng& root, std::size_t round, Phase phase, std::size_t n) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng r = root.split({kShuffle, round, static_cast<std::uint64_t>(phase)});
  std::shuffle(order.begin(), order.end(), r.engine());
  return order;
}

inline Matrix concrete_noise(const Rng& root, std::size_t round, Phase phase, std::size_t graph,
                             std::size_t edges) {
  Rng r = root.split({kConcrete, round, static_cast<std::uint64_t>(phase), graph});
  return logistic_noise(edges, r);
}

inline Matrix edge_gaussian(const Rng& root, std::size_t round, Phase phase, std::size_t graph,
                            std::size_t edges) {
  Rng r = root.split({kGaussian, round, static_cast<std::uint64_t>(phase), graph});
  return gaussian_sample(edges, 1, r);
}

/// One degenerate calibrated graph (a node degree at the clamp floor) can produce a finite
/// gradient near 1e37 that would swamp Adam's second moment; the global norm is capped.
inline constexpr AdamConfig kExplainerAdam{0.9, 0.999, 1e-8, 10.0};

inline void check_model(const GcnParams& f) {
  if (!f.all_finite()) throw ContractError("model parameters contain NaN or Inf");
  if (f.w1.empty()) throw ContractError("model parameters are uninitialized");
}

}  // namespace detail

struct StepResult {
  double gib = 0.0;
  double conf = 0.0;
  double total = 0.0;
  /// False when the gradient was not finite and the update was skipped.
  bool applied = true;
};

namespace detail {
inline bool finite_grads(const std::vector<Matrix>& grads) {
  return std::all_of(grads.begin(), grads.end(), [](const Matrix& g) { return g.all_finite(); });
}
}  // namespace detail

/// One per-graph update of the confidence-free objective.
inline StepResult vanilla_step(const GcnParams& f, ExplainerParams& explainer, OptimizerState& state,
                               const GraphContext& ctx, const Matrix& concrete, double tau,
                               const TrainConfig& cfg) {
  Tape tape;
  GcnVars fv = bind(tape, f, false);
  MlpVars ev = bind(tape, explainer, true);
  Var rows = tape.constant(ctx.edge_rows);
  Var omega = mlp_forward(tape, ev, rows);
  Var m = concrete_mask(tape, omega, tau, concrete);
  Var adj = tape.normalized_adjacency(m, ctx.graph->edges, ctx.graph->n);
  auto out = gcn_forward(tape, fv, tape.constant(ctx.graph->features), adj);
  Var gib = gib_loss(tape, m, out.logits, ctx.label, cfg.weights());
  tape.backward(gib);
  auto tensors = explainer.tensors();
  std::vector<Matrix> grads(tensors.size());
  for (std::size_t k = 0; k < tensors.size(); ++k) grads[k] = tape.grad(ev.v[k]);
  const double g = tape.scalar(gib);
  if (!detail::finite_grads(grads)) return {g, 0.0, g, false};
  adam_step(tensors, grads, state, cfg.lr, detail::kExplainerAdam);
  return {g, 0.0, g};
}

/// One per-graph update of the joint objective for the active phase.
inline StepResult joint_step(const GcnParams& f, ExplainerParams& explainer,
                             ConfidenceParams& confidence, OptimizerState& state, Phase phase,
                             ConfidenceMode mode, const GraphContext& ctx, const Matrix& concrete,
                             const Matrix& gaussian, double tau, const TrainConfig& cfg) {
  Tape tape;
  GcnVars fv = bind(tape, f, false);
  const bool train_explainer = phase == Phase::Explainer;
  MlpVars ev = bind(tape, explainer, train_explainer);
  Var rows = tape.constant(ctx.edge_rows);
  Var omega = mlp_forward(tape, ev, rows);
  Var m = concrete_mask(tape, omega, tau, concrete);
  MlpVars cv{};
  Var c;
  if (mode == ConfidenceMode::Learned) {
    cv = bind(tape, confidence, !train_explainer);
    c = confidence_forward(tape, cv, rows, m);
  } else {
    c = tape.constant(Matrix(ctx.graph->num_edges(), 1, 1.0));
  }
  Var calibrated = calibrate_mask(tape, m, c, gaussian);
  Var adj = tape.normalized_adjacency(calibrated, ctx.graph->edges, ctx.graph->n);
  auto out = gcn_forward(tape, fv, tape.constant(ctx.graph->features), adj);
  Var gib = gib_loss(tape, m, out.logits, ctx.label, cfg.weights());
  Var probs = tape.softmax(out.logits);
  Var conf = confidence_loss(tape, c, probs, ctx.label, cfg.beta);
  Var root = cfg.lambda == 0.0 ? gib : tape.add(gib, tape.scale(conf, cfg.lambda));

  StepResult r{tape.scalar(gib), tape.scalar(conf), 0.0};
  r.total = total_loss(r.gib, r.conf, cfg.lambda);
  if (!train_explainer && mode == ConfidenceMode::ForcedOne) return r;
  tape.backward(root);
  const MlpVars& active = train_explainer ? ev : cv;
  auto tensors = train_explainer ? explainer.tensors() : confidence.tensors();
  std::vector<Matrix> grads(tensors.size());
  for (std::size_t k = 0; k < tensors.size(); ++k) grads[k] = tape.grad(active.v[k]);
  if (!detail::finite_grads(grads)) {
    r.applied = false;
    return r;
  }
  adam_step(tensors, grads, state, cfg.lr, detail::kExplainerAdam);
  return r;
}

struct TrainedExplainer {
  ExplainerParams explainer;
  std::optional<ConfidenceParams> confidence;
  std::vector<EpochLoss> losses;
  std::size_t skipped_steps = 0;
  double seconds = 0.0;
};

/// Called after every epoch with the epoch index and the current parameters.
using EpochHook = std::function<void(std::size_t, Phase, const ExplainerParams&, const ConfidenceParams*)>;

inline TrainedExplainer train_confexplainer(std::span<const LabeledGraph> graphs, const GcnParams& f,
                                            const TrainConfig& cfg,
                                            ConfidenceMode mode = ConfidenceMode::Learned,
                                            const EpochHook& hook = {}) {
  cfg.validate();
  detail::check_model(f);
  if (graphs.empty()) throw ContractError("train_confexplainer: no training graphs");
  const auto start = std::chrono::steady_clock::now();
  const Rng root(cfg.seed);
  Rng init = root.split(detail::kInit);
  TrainedExplainer out;
  out.explainer = init_explainer(f.hidden, init);
  ConfidenceParams confidence = init_confidence(f.hidden, init);
  auto contexts = make_contexts(f, graphs);
  OptimizerState explainer_state = make_optimizer_state(out.explainer.tensors());
  OptimizerState confidence_state = make_optimizer_state(confidence.tensors());
  const auto schedule = cfg.schedule();

  for (std::size_t epoch = 0; epoch < 2 * cfg.epochs; ++epoch) {
    const Phase phase = epoch % 2 == 0 ? Phase::Explainer : Phase::Confidence;
    const std::size_t round = epoch / 2;
    const double tau = schedule.at(round);
    EpochLoss acc{epoch, phase};
    for (std::size_t k : detail::round_order(root, round, phase, contexts.size())) {
      const auto& ctx = contexts[k];
      const std::size_t e = ctx.graph->num_edges();
      Matrix concrete = detail::concrete_noise(root, round, phase, k, e);
      Matrix gaussian = detail::edge_gaussian(root, round, phase, k, e);
      auto r = joint_step(f, out.explainer, confidence,
                          phase == Phase::Explainer ? explainer_state : confidence_state, phase,
                          mode, ctx, concrete, gaussian, tau, cfg);
      acc.gib += r.gib;
      acc.conf += r.conf;
      acc.total += r.total;
      out.skipped_steps += r.applied ? 0 : 1;
    }
    const double n = static_cast<double>(contexts.size());
    acc.gib /= n;
    acc.conf /= n;
    acc.total /= n;
    out.losses.push_back(acc);
    if (hook) hook(epoch, phase, out.explainer, mode == ConfidenceMode::Learned ? &confidence : nullptr);
  }
  if (mode == ConfidenceMode::Learned) out.confidence = std::move(confidence);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

/// Confidence-free baseline: `epochs` explainer epochs on the plain GIB objective.
inline TrainedExplainer train_vanilla_explainer(std::span<const LabeledGraph> graphs,
                                                const GcnParams& f, const TrainConfig& cfg,
                                                const EpochHook& hook = {}) {
  cfg.validate();
  detail::check_model(f);
  if (graphs.empty()) throw ContractError("train_vanilla_explainer: no training graphs");
  const auto start = std::chrono::steady_clock::now();
  const Rng root(cfg.seed);
  Rng init = root.split(detail::kInit);
  TrainedExplainer out;
  out.explainer = init_explainer(f.hidden, init);
  auto contexts = make_contexts(f, graphs);
  OptimizerState state = make_optimizer_state(out.explainer.tensors());
  const auto schedule = cfg.schedule();
  for (std::size_t round = 0; round < cfg.epochs; ++round) {
    const double tau = schedule.at(round);
    EpochLoss acc{round, Phase::Explainer};
    for (std::size_t k : detail::round_order(root, round, Phase::Explainer, contexts.size())) {
      const auto& ctx = contexts[k];
      Matrix concrete = detail::concrete_noise(root, round, Phase::Explainer, k, ctx.graph->num_edges());
      auto r = vanilla_step(f, out.explainer, state, ctx, concrete, tau, cfg);
      out.skipped_steps += r.applied ? 0 : 1;
      acc.gib += r.gib;
      acc.total += r.total;
    }
    const double n = static_cast<double>(contexts.size());
    acc.gib /= n;
    acc.total /= n;
    out.losses.push_back(acc);
    if (hook) hook(round, Phase::Explainer, out.explainer, nullptr);
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace gibconf
