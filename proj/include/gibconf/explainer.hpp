#pragma once

// Parameterized edge-mask explainer: a per-edge MLP over endpoint embeddings,
// trained through a concrete (logistic-noise) relaxation of a binary mask.
// Also hosts the per-instance mask-optimization baseline.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "gibconf/adam.hpp"
#include "gibconf/gcn.hpp"
#include "gibconf/mlp.hpp"
#include "gibconf/rng.hpp"
#include "gibconf/tape.hpp"

namespace gibconf {

/// Soft masks never reach 0 or 1 exactly.
inline constexpr double kMaskEps = 1e-12;
inline constexpr std::size_t kExplainerHidden = 64;

struct ExplainerParams : TwoLayerMlp {};

inline ExplainerParams init_explainer(std::size_t embedding_width, Rng& rng) {
  ExplainerParams p;
  init_mlp(p, 2 * embedding_width, kExplainerHidden, 1, rng);
  return p;
}

/// Per-edge importance weights in (0, 1), aligned with the graph's edge list.
struct EdgeMask {
  std::vector<double> weights;

  std::size_t size() const noexcept { return weights.size(); }
  double operator[](std::size_t i) const { return weights[i]; }
  friend bool operator==(const EdgeMask&, const EdgeMask&) = default;
};

/// Geometric annealing tau(t) = tau0 * (tauT / tau0)^(t / T).
struct TemperatureSchedule {
  double tau0 = 5.0;
  double tau_final = 2.0;
  std::size_t epochs = 30;

  double at(std::size_t epoch) const {
    if (!(tau0 >= tau_final && tau_final > 0.0)) {
      throw ParameterError("temperature schedule needs tau0 >= tauT > 0");
    }
    if (epochs == 0) return tau0;
    const double frac = static_cast<double>(epoch) / static_cast<double>(epochs);
    return tau0 * std::pow(tau_final / tau0, frac);
  }
};

/// Row e is [Z_u | Z_v] for edge e = (u, v), u < v.
inline Matrix edge_inputs(const Matrix& z, std::span<const Edge> edges) {
  Tape tape;
  return tape.value(tape.gather_pairs(tape.constant(z), edges));
}

inline Matrix explainer_logits(const ExplainerParams& p, const Matrix& edge_rows) {
  Tape tape;
  auto vars = bind(tape, p, false);
  return tape.value(mlp_forward(tape, vars, tape.constant(edge_rows)));
}

/// Logistic noise ln u - ln(1 - u), one draw per edge.
inline Matrix logistic_noise(std::size_t edges, Rng& rng) {
  Matrix out(edges, 1);
  for (double& v : out.values()) {
    const double u = rng.uniform_open();
    v = std::log(u) - std::log1p(-u);
  }
  return out;
}

/// Reparameterized relaxed mask on the tape: sigmoid((noise + omega) / tau).
inline Var concrete_mask(Tape& tape, Var omega, double tau, const Matrix& noise) {
  if (!(tau > 0.0)) throw ParameterError("temperature must be positive");
  Var shifted = tape.add(omega, tape.constant(noise));
  return tape.clamp_open(tape.sigmoid(tape.scale(shifted, 1.0 / tau)), kMaskEps);
}

inline Var sigmoid_mask(Tape& tape, Var omega) {
  return tape.clamp_open(tape.sigmoid(omega), kMaskEps);
}

inline EdgeMask sample_mask(std::span<const double> omega, double tau, std::uint64_t seed) {
  if (!(tau > 0.0)) throw ParameterError("temperature must be positive");
  Rng rng(seed);
  Tape tape;
  Matrix noise = logistic_noise(omega.size(), rng);
  Var m = concrete_mask(tape, tape.constant(Matrix::column(omega)), tau, noise);
  const auto& v = tape.value(m).values();
  return {{v.begin(), v.end()}};
}

inline EdgeMask deterministic_mask(std::span<const double> omega) {
  EdgeMask m;
  m.weights.reserve(omega.size());
  for (double w : omega) m.weights.push_back(std::clamp(sigmoid(w), kMaskEps, 1.0 - kMaskEps));
  return m;
}

struct MaskRegularizers {
  double size_term = 0.0;
  double entropy_term = 0.0;
};

/// size = sum of weights; entropy = mean binary entropy. Coefficients are applied by callers.
inline MaskRegularizers mask_regularizers(const EdgeMask& m) {
  MaskRegularizers r;
  if (m.weights.empty()) return r;
  for (double p : m.weights) {
    r.size_term += p;
    r.entropy_term += -p * std::log(p) - (1.0 - p) * std::log1p(-p);
  }
  r.entropy_term /= static_cast<double>(m.weights.size());
  return r;
}

struct MaskRegularizerVars {
  Var size_term;
  Var entropy_term;
};

inline MaskRegularizerVars mask_regularizers(Tape& tape, Var mask) {
  return {tape.sum(mask), tape.binary_entropy_mean(mask)};
}

struct GnnExplainerConfig {
  std::size_t iters = 100;
  double lr = 0.005;
  double size_coeff = 0.0003;
  double entropy_coeff = 0.3;
  double init_std = 0.1;
};

/// Per-instance structure mask optimized against the model's own prediction on the
/// full graph plus both regularizers.
inline EdgeMask gnnexplainer_baseline(const GcnParams& f, const LabeledGraph& lg,
                                      const GnnExplainerConfig& cfg, std::uint64_t seed) {
  const Graph& g = lg.graph;
  const std::size_t target = predict(f, g);
  Rng rng(seed);
  Matrix logits(g.num_edges(), 1);
  for (double& v : logits.values()) v = cfg.init_std * rng.normal();
  std::array<Matrix*, 1> params = {&logits};
  OptimizerState state = make_optimizer_state(params);
  std::vector<Matrix> grads(1);
  for (std::size_t it = 0; it < cfg.iters; ++it) {
    Tape tape;
    GcnVars fv = bind(tape, f, false);
    Var omega = tape.variable(logits);
    Var m = sigmoid_mask(tape, omega);
    Var adj = tape.normalized_adjacency(m, g.edges, g.n);
    auto out = gcn_forward(tape, fv, tape.constant(g.features), adj);
    Var ce = tape.softmax_cross_entropy(out.logits, target);
    auto reg = mask_regularizers(tape, m);
    Var loss = tape.add(ce, tape.add(tape.scale(reg.size_term, cfg.size_coeff),
                                     tape.scale(reg.entropy_term, cfg.entropy_coeff)));
    tape.backward(loss);
    grads[0] = tape.grad(omega);
    adam_step(params, grads, state, cfg.lr);
  }
  return deterministic_mask(logits.values());
}

inline constexpr const char* kExplainerSchema = "gibconf-expl/1";

inline void save_explainer(const ExplainerParams& p, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_mlp(p, kExplainerSchema));
}
inline ExplainerParams load_explainer(const std::filesystem::path& path) {
  ExplainerParams p;
  parse_mlp(read_file(path), kExplainerSchema, p);
  return p;
}

}  // namespace gibconf
