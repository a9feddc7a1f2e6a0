#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <vector>

#include "gibconf/evaluate.hpp"
#include "gibconf/generator.hpp"
#include "gibconf/tape.hpp"

namespace gibconf {
inline void PrintTo(const Matrix& m, std::ostream* os) {
  *os << m.shape_string() << " [";
  for (std::size_t i = 0; i < m.size(); ++i) *os << (i ? ", " : "") << m[i];
  *os << "]";
}
}  // namespace gibconf

namespace testing_support {

using namespace gibconf;

using LossBuilder = std::function<Var(Tape&, const std::vector<Var>&)>;

inline double loss_at(const LossBuilder& build, const std::vector<Matrix>& params) {
  Tape tape;
  std::vector<Var> vars;
  for (const auto& p : params) vars.push_back(tape.constant(p));
  return tape.scalar(build(tape, vars));
}

/// Largest per-tensor relative error ||analytic - numeric|| / max(||analytic||, ||numeric||)
/// between reverse-mode gradients and central differences with step h.
inline double fd_relative_error(const LossBuilder& build, std::vector<Matrix> params, double h = 1e-5) {
  Tape tape;
  std::vector<Var> vars;
  for (const auto& p : params) vars.push_back(tape.variable(p));
  tape.backward(build(tape, vars));
  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const Matrix analytic = tape.grad(vars[k]);
    double diff = 0.0, na = 0.0, nn = 0.0;
    for (std::size_t i = 0; i < params[k].size(); ++i) {
      const double keep = params[k][i];
      params[k][i] = keep + h;
      const double up = loss_at(build, params);
      params[k][i] = keep - h;
      const double down = loss_at(build, params);
      params[k][i] = keep;
      const double numeric = (up - down) / (2.0 * h);
      diff += (analytic[i] - numeric) * (analytic[i] - numeric);
      na += analytic[i] * analytic[i];
      nn += numeric * numeric;
    }
    const double scale = std::sqrt(std::max(na, nn));
    if (scale > 0.0) worst = std::max(worst, std::sqrt(diff) / scale);
  }
  return worst;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) return INFINITY;
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

inline Matrix uniform_matrix(std::size_t r, std::size_t c, double lo, double hi, Rng& rng) {
  Matrix m(r, c);
  for (double& v : m.values()) v = lo + (hi - lo) * rng.uniform();
  return m;
}

/// Six nodes, seven edges: a hexagon with one chord, features drawn in [-1, 1].
inline Graph six_node_graph(std::size_t feature_dim = 4, std::uint64_t seed = 5) {
  Graph g;
  g.n = 6;
  for (auto [u, v] : std::vector<std::pair<std::size_t, std::size_t>>{
           {0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {0, 5}, {1, 4}})
    g.add_edge(u, v);
  Rng rng(seed);
  g.features = uniform_matrix(6, feature_dim, -1.0, 1.0, rng);
  return g;
}

/// Small dataset and a GCN trained on it, built once per test binary.
struct Fixture {
  Dataset data;
  GcnParams model;
};

inline const Fixture& small_fixture() {
  static const Fixture f = [] {
    DatasetConfig cfg;
    cfg.num_graphs = 120;
    Fixture out;
    out.data = generate_dataset(cfg, 3);
    GnnTrainConfig g;
    g.epochs = 30;
    out.model = train_gnn(out.data, g, 3).params;
    return out;
  }();
  return f;
}

}  // namespace testing_support
