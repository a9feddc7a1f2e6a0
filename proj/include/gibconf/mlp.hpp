#pragma once

#include <array>
#include <string>

#include "gibconf/checkpoint.hpp"
#include "gibconf/gcn.hpp"
#include "gibconf/rng.hpp"
#include "gibconf/tape.hpp"

namespace gibconf {

/// in -> hidden (ReLU) -> out, applied row-wise.
struct TwoLayerMlp {
  Matrix w1, b1, w2, b2;

  std::size_t input_width() const noexcept { return w1.rows(); }
  std::size_t hidden_width() const noexcept { return w1.cols(); }

  std::array<Matrix*, 4> tensors() { return {&w1, &b1, &w2, &b2}; }
  std::array<const Matrix*, 4> tensors() const { return {&w1, &b1, &w2, &b2}; }
  static constexpr std::array<const char*, 4> kNames = {"w1", "b1", "w2", "b2"};

  bool all_finite() const {
    for (const Matrix* m : tensors())
      if (!m->all_finite()) return false;
    return true;
  }

  friend bool operator==(const TwoLayerMlp&, const TwoLayerMlp&) = default;
};

inline void init_mlp(TwoLayerMlp& p, std::size_t in, std::size_t hidden, std::size_t out, Rng& rng) {
  p.w1 = glorot(in, hidden, rng);
  p.b1 = Matrix(1, hidden);
  p.w2 = glorot(hidden, out, rng);
  p.b2 = Matrix(1, out);
}

struct MlpVars {
  std::array<Var, 4> v;
};

inline MlpVars bind(Tape& tape, const TwoLayerMlp& p, bool trainable) {
  MlpVars out;
  auto t = p.tensors();
  for (std::size_t k = 0; k < t.size(); ++k)
    out.v[k] = trainable ? tape.variable(*t[k]) : tape.constant(*t[k]);
  return out;
}

inline Var mlp_forward(Tape& tape, const MlpVars& p, Var rows) {
  if (tape.value(rows).cols() != tape.value(p.v[0]).rows()) {
    throw DimensionError("mlp input width " + std::to_string(tape.value(rows).cols()) +
                         " does not match expected " + std::to_string(tape.value(p.v[0]).rows()));
  }
  Var hidden = tape.relu(tape.add_row(tape.matmul(rows, p.v[0]), p.v[1]));
  return tape.add_row(tape.matmul(hidden, p.v[2]), p.v[3]);
}

inline std::string serialize_mlp(const TwoLayerMlp& p, const std::string& schema) {
  NamedTensors t;
  auto ts = p.tensors();
  for (std::size_t k = 0; k < ts.size(); ++k) t.emplace_back(TwoLayerMlp::kNames[k], *ts[k]);
  nlohmann::json shape = {{"input", p.w1.rows()}, {"hidden", p.w1.cols()}, {"output", p.w2.cols()}};
  return serialize_checkpoint(schema, shape, t);
}

inline void parse_mlp(const std::string& text, const std::string& schema, TwoLayerMlp& p) {
  auto c = parse_checkpoint(text, schema);
  std::size_t in = 0, hidden = 0, out = 0;
  try {
    in = c.shape.at("input").get<std::size_t>();
    hidden = c.shape.at("hidden").get<std::size_t>();
    out = c.shape.at("output").get<std::size_t>();
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError(0, std::string("checkpoint shape: ") + ex.what());
  }
  p.w1 = checkpoint_tensor(c, "w1", in, hidden);
  p.b1 = checkpoint_tensor(c, "b1", 1, hidden);
  p.w2 = checkpoint_tensor(c, "w2", hidden, out);
  p.b2 = checkpoint_tensor(c, "b2", 1, out);
}

}  // namespace gibconf
