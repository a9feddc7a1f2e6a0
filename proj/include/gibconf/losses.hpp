#pragma once

#include <cstddef>

#include "gibconf/explainer.hpp"
#include "gibconf/tape.hpp"

namespace gibconf {

/// Weights of the explanation objective.
struct LossWeights {
  double alpha = 1.0;
  double size_coeff = 0.0003;
  double entropy_coeff = 0.3;
};

/// size_coeff * sum(m) + entropy_coeff * mean H(m) + alpha * CE(logits, label).
/// The prediction term is recorded before the regularizers; both trainers rely on
/// that order so their gradients accumulate identically.
inline Var gib_loss(Tape& tape, Var mask, Var logits, std::size_t label, const LossWeights& w) {
  Var ce = tape.softmax_cross_entropy(logits, label);
  auto reg = mask_regularizers(tape, mask);
  Var compact = tape.add(tape.scale(reg.size_term, w.size_coeff),
                         tape.scale(reg.entropy_term, w.entropy_coeff));
  return tape.add(compact, tape.scale(ce, w.alpha));
}

inline double gib_loss(const EdgeMask& m, double cross_entropy, const LossWeights& w) {
  auto reg = mask_regularizers(m);
  return (w.size_coeff * reg.size_term + w.entropy_coeff * reg.entropy_term) +
         w.alpha * cross_entropy;
}

inline double total_loss(double gib, double conf, double lambda) { return gib + lambda * conf; }

}  // namespace gibconf
