#pragma once

// Confidence scoring for explanations.
//
// A per-edge MLP reads [Z_u | Z_v | m_e] and emits a raw score k_e; the edge
// confidence is sigmoid(k_e). The calibrated graph mixes the explanation mask
// with Gaussian edge noise, w_e = C_e m_e + (1 - C_e) r_e, and the confidence
// loss weights the squared true-class error by the mean confidence, signed by
// whether the calibrated graph is classified correctly.

#include <cstdint>
#include <filesystem>
#include <numeric>
#include <span>
#include <vector>

#include "gibconf/explainer.hpp"
#include "gibconf/mlp.hpp"
#include "gibconf/rng.hpp"
#include "gibconf/tape.hpp"

namespace gibconf {

inline constexpr std::size_t kConfidenceHidden = 64;

struct ConfidenceParams : TwoLayerMlp {};

inline ConfidenceParams init_confidence(std::size_t embedding_width, Rng& rng) {
  ConfidenceParams p;
  init_mlp(p, 2 * embedding_width + 1, kConfidenceHidden, 1, rng);
  return p;
}

struct ConfidenceScores {
  std::vector<double> per_edge;
  double graph_confidence = 0.0;
};

/// Arithmetic mean of the per-edge confidences.
inline double graph_confidence(std::span<const double> per_edge) {
  if (per_edge.empty()) throw ContractError("graph_confidence: graph has no edges");
  return std::accumulate(per_edge.begin(), per_edge.end(), 0.0) /
         static_cast<double>(per_edge.size());
}
inline double graph_confidence(const ConfidenceScores& c) { return graph_confidence(c.per_edge); }

/// Per-edge confidences on the tape, E x 1, strictly inside (0, 1).
inline Var confidence_forward(Tape& tape, const MlpVars& p, Var edge_rows, Var mask) {
  if (tape.value(edge_rows).rows() != tape.value(mask).rows()) {
    throw DimensionError("confidence_forward: " + std::to_string(tape.value(edge_rows).rows()) +
                         " edge rows but " + std::to_string(tape.value(mask).rows()) +
                         " mask entries");
  }
  Var raw = mlp_forward(tape, p, tape.concat_cols(edge_rows, mask));
  return tape.clamp_open(tape.sigmoid(raw), kMaskEps);
}

inline ConfidenceScores confidence_forward(const ConfidenceParams& p, const Matrix& edge_rows,
                                           const EdgeMask& m) {
  Tape tape;
  auto vars = bind(tape, p, false);
  Var c = confidence_forward(tape, vars, tape.constant(edge_rows),
                             tape.constant(Matrix::column(m.weights)));
  ConfidenceScores out;
  const auto& v = tape.value(c).values();
  out.per_edge.assign(v.begin(), v.end());
  out.graph_confidence = out.per_edge.empty() ? 0.0 : graph_confidence(out.per_edge);
  return out;
}

struct CalibratedMask {
  std::vector<double> weights;
  std::vector<double> noise;
};

/// C * m + (1 - C) * r, evaluated literally so that C == 1 reproduces m bit-exactly.
inline Var calibrate_mask(Tape& tape, Var mask, Var confidence, const Matrix& noise) {
  require_same_shape(tape.value(mask), tape.value(confidence), "calibrate_mask");
  require_same_shape(tape.value(mask), noise, "calibrate_mask noise");
  Var kept = tape.mul(confidence, mask);
  Var mixed = tape.mul(tape.affine(confidence, -1.0, 1.0), tape.constant(noise));
  return tape.add(kept, mixed);
}

inline CalibratedMask calibrate_mask(const EdgeMask& m, std::span<const double> confidence,
                                     std::uint64_t seed) {
  if (m.size() != confidence.size()) {
    throw DimensionError("calibrate_mask: " + std::to_string(m.size()) + " mask entries, " +
                         std::to_string(confidence.size()) + " confidences");
  }
  Matrix noise = gaussian_sample(m.size(), 1, seed);
  CalibratedMask out;
  out.noise.assign(noise.values().begin(), noise.values().end());
  out.weights.resize(m.size());
  for (std::size_t e = 0; e < m.size(); ++e)
    out.weights[e] = confidence[e] * m[e] + (1.0 - confidence[e]) * out.noise[e];
  return out;
}

inline CalibratedMask calibrate_mask(const EdgeMask& m, const ConfidenceScores& c,
                                     std::uint64_t seed) {
  return calibrate_mask(m, c.per_edge, seed);
}

/// +1 when the argmax (ties to the lower class) equals the label, else -1.
inline int true_prediction_mask(std::span<const double> probs, std::size_t label) {
  return argmax(probs) == label ? 1 : -1;
}

/// beta * M_tp * (p[label] - 1)^2 * mean(C) on the tape.
inline Var confidence_loss(Tape& tape, Var confidence, Var probs, std::size_t label, double beta) {
  const Matrix& p = tape.value(probs);
  if (label >= p.cols()) throw IndexError("confidence_loss: label out of range");
  const int mtp = true_prediction_mask(p.values(), label);
  Var err = tape.square(tape.affine(tape.pick(probs, 0, label), 1.0, -1.0));
  return tape.scale(tape.mul(err, tape.mean(confidence)), beta * static_cast<double>(mtp));
}

inline double confidence_loss(std::span<const double> confidence, std::span<const double> probs,
                              std::size_t label, double beta) {
  if (label >= probs.size()) throw IndexError("confidence_loss: label out of range");
  const double err = (probs[label] - 1.0) * (probs[label] - 1.0);
  const double mtp = true_prediction_mask(probs, label);
  return beta * mtp * err * graph_confidence(confidence);
}

inline constexpr const char* kConfidenceSchema = "gibconf-conf/1";

inline void save_confidence(const ConfidenceParams& p, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_mlp(p, kConfidenceSchema));
}
inline ConfidenceParams load_confidence(const std::filesystem::path& path) {
  ConfidenceParams p;
  parse_mlp(read_file(path), kConfidenceSchema, p);
  return p;
}

}  // namespace gibconf
