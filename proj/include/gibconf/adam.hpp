#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "gibconf/errors.hpp"
#include "gibconf/matrix.hpp"

namespace gibconf {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// Gradients whose global L2 norm exceeds this are rescaled to it; 0 disables.
  double clip_norm = 0.0;
};

/// Per-entry Adam moments for one parameter bundle.
struct OptimizerState {
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
  std::uint64_t step = 0;
};

inline OptimizerState make_optimizer_state(std::span<Matrix* const> params) {
  OptimizerState s;
  for (const Matrix* p : params) {
    s.first_moment.emplace_back(p->rows(), p->cols());
    s.second_moment.emplace_back(p->rows(), p->cols());
  }
  return s;
}

/// One bias-corrected Adam update applied in place.
inline void adam_step(std::span<Matrix* const> params, std::span<const Matrix> grads,
                      OptimizerState& state, double lr, const AdamConfig& cfg = {}) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
    throw DimensionError("adam_step: " + std::to_string(params.size()) + " parameters, " +
                         std::to_string(grads.size()) + " gradients, " +
                         std::to_string(state.first_moment.size()) + " state slots");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    require_same_shape(*params[k], grads[k], "adam_step");
    require_same_shape(*params[k], state.first_moment[k], "adam_step state");
  }
  double scale = 1.0;
  if (cfg.clip_norm > 0.0) {
    double sq = 0.0;
    for (const Matrix& g : grads)
      for (double v : g.values()) sq += v * v;
    const double norm = std::sqrt(sq);
    if (norm > cfg.clip_norm) scale = cfg.clip_norm / norm;
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Matrix& p = *params[k];
    Matrix& m = state.first_moment[k];
    Matrix& v = state.second_moment[k];
    const Matrix& g = grads[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = scale * g[i];
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      p[i] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

}  // namespace gibconf
