#pragma once

// Minimal reverse-mode differentiation over dense matrices.
//
// A Tape records every operation in creation order, so the recorded graph is
// acyclic by construction and backward() is a single reverse sweep. Gradients are
// only propagated into nodes that depend on a variable leaf.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "gibconf/edge.hpp"
#include "gibconf/errors.hpp"
#include "gibconf/matrix.hpp"

namespace gibconf {

enum class OpKind {
  Constant,
  Variable,
  MatMul,
  Add,
  AddRowBroadcast,
  Sub,
  Mul,
  Affine,
  Relu,
  Sigmoid,
  ClampOpen,
  Square,
  Sum,
  MeanAll,
  MeanRows,
  ConcatCols,
  GatherPairs,
  NormalizedAdjacency,
  Softmax,
  SoftmaxCrossEntropy,
  Pick,
  BinaryEntropyMean,
};

/// Handle to a node on a Tape.
struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
};

/// Degrees of (A + I) are clamped below at this value before taking d^{-1/2}.
inline constexpr double kDegreeFloor = 1e-12;

class Tape {
 public:
  Tape() { nodes_.reserve(64); }

  Var constant(Matrix value) { return push(OpKind::Constant, {}, std::move(value), false); }
  Var variable(Matrix value) { return push(OpKind::Variable, {}, std::move(value), true); }

  const Matrix& value(Var v) const { return nodes_.at(v.id).value; }
  double scalar(Var v) const { return value(v)[0]; }
  bool needs_grad(Var v) const { return nodes_.at(v.id).needs_grad; }
  OpKind kind(Var v) const { return nodes_.at(v.id).op; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Gradient of the last backward() root w.r.t. `v`; zeros if nothing flowed into it.
  Matrix grad(Var v) const {
    const Node& n = nodes_.at(v.id);
    if (n.grad.empty() && !n.value.empty()) return Matrix(n.value.rows(), n.value.cols());
    return n.grad;
  }

  Var matmul(Var a, Var b) {
    const Matrix& x = value(a);
    const Matrix& y = value(b);
    if (x.cols() != y.rows()) {
      throw DimensionError("matmul: inner dimensions differ " + x.shape_string() + " * " +
                           y.shape_string());
    }
    Matrix out(x.rows(), y.cols());
    matmul_accumulate(x, y, out);
    return push(OpKind::MatMul, {a, b}, std::move(out));
  }

  Var add(Var a, Var b) {
    require_same_shape(value(a), value(b), "add");
    Matrix out = value(a);
    const Matrix& y = value(b);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += y[i];
    return push(OpKind::Add, {a, b}, std::move(out));
  }

  /// x (n x c) plus a 1 x c row added to every row.
  Var add_row(Var x, Var bias) {
    const Matrix& b = value(bias);
    Matrix out = value(x);
    if (b.rows() != 1 || b.cols() != out.cols()) {
      throw DimensionError("add_row: bias " + b.shape_string() + " does not fit " +
                           out.shape_string());
    }
    for (std::size_t r = 0; r < out.rows(); ++r)
      for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += b[c];
    return push(OpKind::AddRowBroadcast, {x, bias}, std::move(out));
  }

  Var sub(Var a, Var b) {
    require_same_shape(value(a), value(b), "sub");
    Matrix out = value(a);
    const Matrix& y = value(b);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= y[i];
    return push(OpKind::Sub, {a, b}, std::move(out));
  }

  /// Elementwise product.
  Var mul(Var a, Var b) {
    require_same_shape(value(a), value(b), "mul");
    Matrix out = value(a);
    const Matrix& y = value(b);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= y[i];
    return push(OpKind::Mul, {a, b}, std::move(out));
  }

  /// scale * x + shift, elementwise.
  Var affine(Var x, double scale, double shift = 0.0) {
    Matrix out = value(x);
    for (double& v : out.values()) v = scale * v + shift;
    Var r = push(OpKind::Affine, {x}, std::move(out));
    nodes_[r.id].a = scale;
    return r;
  }
  Var scale(Var x, double s) { return affine(x, s, 0.0); }

  Var relu(Var x) {
    Matrix out = value(x);
    for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
    return push(OpKind::Relu, {x}, std::move(out));
  }

  Var sigmoid(Var x) {
    Matrix out = value(x);
    for (double& v : out.values()) v = gibconf::sigmoid(v);
    return push(OpKind::Sigmoid, {x}, std::move(out));
  }

  /// Clamp into [eps, 1 - eps]; gradient passes only where no clamping happened.
  Var clamp_open(Var x, double eps) {
    Matrix out = value(x);
    for (double& v : out.values()) v = std::clamp(v, eps, 1.0 - eps);
    Var r = push(OpKind::ClampOpen, {x}, std::move(out));
    nodes_[r.id].a = eps;
    return r;
  }

  Var square(Var x) {
    Matrix out = value(x);
    for (double& v : out.values()) v = v * v;
    return push(OpKind::Square, {x}, std::move(out));
  }

  Var sum(Var x) {
    double s = 0.0;
    for (double v : value(x).values()) s += v;
    return push(OpKind::Sum, {x}, Matrix::scalar(s));
  }

  Var mean(Var x) {
    const Matrix& m = value(x);
    if (m.empty()) throw ContractError("mean of an empty matrix");
    double s = 0.0;
    for (double v : m.values()) s += v;
    return push(OpKind::MeanAll, {x}, Matrix::scalar(s / static_cast<double>(m.size())));
  }

  /// Column means: (n x c) -> (1 x c).
  Var mean_rows(Var x) {
    const Matrix& m = value(x);
    if (m.rows() == 0) throw ContractError("mean_rows of a matrix with no rows");
    Matrix out(1, m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r)
      for (std::size_t c = 0; c < m.cols(); ++c) out[c] += m(r, c);
    const double inv = 1.0 / static_cast<double>(m.rows());
    for (double& v : out.values()) v *= inv;
    return push(OpKind::MeanRows, {x}, std::move(out));
  }

  /// [a | b] column concatenation; row counts must match.
  Var concat_cols(Var a, Var b) {
    const Matrix& x = value(a);
    const Matrix& y = value(b);
    if (x.rows() != y.rows()) {
      throw DimensionError("concat_cols: row counts differ " + x.shape_string() + " | " +
                           y.shape_string());
    }
    Matrix out(x.rows(), x.cols() + y.cols());
    for (std::size_t r = 0; r < x.rows(); ++r) {
      std::copy(x.row_span(r).begin(), x.row_span(r).end(), out.row_span(r).begin());
      std::copy(y.row_span(r).begin(), y.row_span(r).end(),
                out.row_span(r).begin() + static_cast<std::ptrdiff_t>(x.cols()));
    }
    return push(OpKind::ConcatCols, {a, b}, std::move(out));
  }

  /// Row e of the result is [x_u | x_v] for edges[e] = (u, v).
  Var gather_pairs(Var x, std::span<const Edge> edges) {
    const Matrix& z = value(x);
    const std::size_t h = z.cols();
    Matrix out(edges.size(), 2 * h);
    for (std::size_t e = 0; e < edges.size(); ++e) {
      if (edges[e].u >= z.rows() || edges[e].v >= z.rows()) {
        throw IndexError("gather_pairs: edge endpoint out of range");
      }
      auto dst = out.row_span(e);
      std::copy(z.row_span(edges[e].u).begin(), z.row_span(edges[e].u).end(), dst.begin());
      std::copy(z.row_span(edges[e].v).begin(), z.row_span(edges[e].v).end(),
                dst.begin() + static_cast<std::ptrdiff_t>(h));
    }
    Var r = push(OpKind::GatherPairs, {x}, std::move(out));
    nodes_[r.id].edges.assign(edges.begin(), edges.end());
    return r;
  }

  /// D^{-1/2} (A + I) D^{-1/2} where A holds one weight per undirected edge.
  Var normalized_adjacency(Var weights, std::span<const Edge> edges, std::size_t n) {
    const Matrix& w = value(weights);
    if (w.size() != edges.size()) {
      throw DimensionError("normalized_adjacency: " + std::to_string(w.size()) +
                           " weights for " + std::to_string(edges.size()) + " edges");
    }
    Matrix raw = Matrix::identity(n);
    for (std::size_t e = 0; e < edges.size(); ++e) {
      if (edges[e].u >= n || edges[e].v >= n) {
        throw IndexError("normalized_adjacency: edge endpoint out of range");
      }
      raw(edges[e].u, edges[e].v) += w[e];
      raw(edges[e].v, edges[e].u) += w[e];
    }
    Matrix inv_sqrt(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
      double d = 0.0;
      for (double v : raw.row_span(i)) d += v;
      inv_sqrt[i] = 1.0 / std::sqrt(std::max(d, kDegreeFloor));
    }
    Matrix out(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) out(i, j) = inv_sqrt[i] * raw(i, j) * inv_sqrt[j];
    Var r = push(OpKind::NormalizedAdjacency, {weights}, std::move(out));
    Node& node = nodes_[r.id];
    node.edges.assign(edges.begin(), edges.end());
    node.cache = std::move(raw);
    node.cache2 = std::move(inv_sqrt);
    return r;
  }

  /// Row-wise softmax.
  Var softmax(Var x) {
    Matrix out = value(x);
    for (std::size_t r = 0; r < out.rows(); ++r) {
      auto row = out.row_span(r);
      const double mx = *std::max_element(row.begin(), row.end());
      double s = 0.0;
      for (double& v : row) {
        v = std::exp(v - mx);
        s += v;
      }
      for (double& v : row) v /= s;
    }
    return push(OpKind::Softmax, {x}, std::move(out));
  }

  /// -log softmax(logits)[label] for a 1 x c logit row.
  Var softmax_cross_entropy(Var logits, std::size_t label) {
    const Matrix& z = value(logits);
    if (z.rows() != 1) throw DimensionError("softmax_cross_entropy: logits must be one row");
    if (label >= z.cols()) {
      throw IndexError("softmax_cross_entropy: label " + std::to_string(label) +
                       " out of range for " + std::to_string(z.cols()) + " classes");
    }
    const double mx = *std::max_element(z.values().begin(), z.values().end());
    double s = 0.0;
    Matrix probs(1, z.cols());
    for (std::size_t c = 0; c < z.cols(); ++c) {
      probs[c] = std::exp(z[c] - mx);
      s += probs[c];
    }
    for (double& p : probs.values()) p /= s;
    const double loss = (mx + std::log(s)) - z[label];
    Var r = push(OpKind::SoftmaxCrossEntropy, {logits}, Matrix::scalar(loss));
    nodes_[r.id].index = label;
    nodes_[r.id].cache = std::move(probs);
    return r;
  }

  /// Single entry as a 1 x 1 node.
  Var pick(Var x, std::size_t row, std::size_t col) {
    const Matrix& m = value(x);
    if (row >= m.rows() || col >= m.cols()) throw IndexError("pick: index out of range");
    Var r = push(OpKind::Pick, {x}, Matrix::scalar(m(row, col)));
    nodes_[r.id].index = row * m.cols() + col;
    return r;
  }

  /// mean over entries of -p ln p - (1-p) ln(1-p); entries must lie in (0, 1).
  Var binary_entropy_mean(Var x) {
    const Matrix& m = value(x);
    if (m.empty()) throw ContractError("binary_entropy_mean of an empty matrix");
    double s = 0.0;
    for (double p : m.values()) s += -p * std::log(p) - (1.0 - p) * std::log1p(-p);
    return push(OpKind::BinaryEntropyMean, {x}, Matrix::scalar(s / static_cast<double>(m.size())));
  }

  /// Reverse sweep from a 1 x 1 root. Previous gradients are discarded.
  void backward(Var root) {
    const Matrix& rv = value(root);
    if (rv.rows() != 1 || rv.cols() != 1) {
      throw ContractError("backward: root must be a scalar, got " + rv.shape_string());
    }
    for (Node& n : nodes_) n.grad = Matrix();
    nodes_[root.id].grad = Matrix::scalar(1.0);
    for (std::size_t i = root.id + 1; i-- > 0;) {
      if (!nodes_[i].needs_grad || nodes_[i].grad.empty()) continue;
      propagate(i);
    }
  }

 private:
  struct Node {
    OpKind op = OpKind::Constant;
    std::size_t in[2] = {0, 0};
    std::size_t arity = 0;
    Matrix value;
    Matrix grad;
    bool needs_grad = false;
    double a = 0.0;
    std::size_t index = 0;
    std::vector<Edge> edges;
    Matrix cache;
    Matrix cache2;
  };

  Var push(OpKind op, std::initializer_list<Var> inputs, Matrix value, bool leaf_grad = false) {
    Node n;
    n.op = op;
    n.value = std::move(value);
    n.needs_grad = leaf_grad;
    for (Var v : inputs) {
      n.in[n.arity++] = v.id;
      n.needs_grad = n.needs_grad || nodes_[v.id].needs_grad;
    }
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
  }

  /// Gradient buffer of input slot k of node i, or nullptr if that input needs none.
  Matrix* slot(std::size_t i, std::size_t k) {
    Node& src = nodes_[nodes_[i].in[k]];
    if (!src.needs_grad) return nullptr;
    if (src.grad.empty()) src.grad = Matrix(src.value.rows(), src.value.cols());
    return &src.grad;
  }

  void propagate(std::size_t i) {
    Node& n = nodes_[i];
    const Matrix& g = n.grad;
    switch (n.op) {
      case OpKind::Constant:
      case OpKind::Variable:
        return;
      case OpKind::MatMul: {
        const Matrix& a = nodes_[n.in[0]].value;
        const Matrix& b = nodes_[n.in[1]].value;
        if (Matrix* ga = slot(i, 0)) matmul_a_bt_accumulate(g, b, *ga);
        if (Matrix* gb = slot(i, 1)) matmul_at_b_accumulate(a, g, *gb);
        return;
      }
      case OpKind::Add: {
        if (Matrix* ga = slot(i, 0))
          for (std::size_t k = 0; k < g.size(); ++k) (*ga)[k] += g[k];
        if (Matrix* gb = slot(i, 1))
          for (std::size_t k = 0; k < g.size(); ++k) (*gb)[k] += g[k];
        return;
      }
      case OpKind::AddRowBroadcast: {
        if (Matrix* gx = slot(i, 0))
          for (std::size_t k = 0; k < g.size(); ++k) (*gx)[k] += g[k];
        if (Matrix* gb = slot(i, 1))
          for (std::size_t r = 0; r < g.rows(); ++r)
            for (std::size_t c = 0; c < g.cols(); ++c) (*gb)[c] += g(r, c);
        return;
      }
      case OpKind::Sub: {
        if (Matrix* ga = slot(i, 0))
          for (std::size_t k = 0; k < g.size(); ++k) (*ga)[k] += g[k];
        if (Matrix* gb = slot(i, 1))
          for (std::size_t k = 0; k < g.size(); ++k) (*gb)[k] -= g[k];
        return;
      }
      case OpKind::Mul: {
        const Matrix& a = nodes_[n.in[0]].value;
        const Matrix& b = nodes_[n.in[1]].value;
        if (Matrix* ga = slot(i, 0))
          for (std::size_t k = 0; k < g.size(); ++k) (*ga)[k] += g[k] * b[k];
        if (Matrix* gb = slot(i, 1))
          for (std::size_t k = 0; k < g.size(); ++k) (*gb)[k] += g[k] * a[k];
        return;
      }
      case OpKind::Affine: {
        if (Matrix* gx = slot(i, 0))
          for (std::size_t k = 0; k < g.size(); ++k) (*gx)[k] += n.a * g[k];
        return;
      }
      case OpKind::Relu: {
        const Matrix& x = nodes_[n.in[0]].value;
        if (Matrix* gx = slot(i, 0))
          for (std::size_t k = 0; k < g.size(); ++k)
            if (x[k] > 0.0) (*gx)[k] += g[k];
        return;
      }
      case OpKind::Sigmoid: {
        if (Matrix* gx = slot(i, 0))
          for (std::size_t k = 0; k < g.size(); ++k) {
            const double y = n.value[k];
            (*gx)[k] += g[k] * y * (1.0 - y);
          }
        return;
      }
      case OpKind::ClampOpen: {
        const Matrix& x = nodes_[n.in[0]].value;
        if (Matrix* gx = slot(i, 0))
          for (std::size_t k = 0; k < g.size(); ++k)
            if (x[k] > n.a && x[k] < 1.0 - n.a) (*gx)[k] += g[k];
        return;
      }
      case OpKind::Square: {
        const Matrix& x = nodes_[n.in[0]].value;
        if (Matrix* gx = slot(i, 0))
          for (std::size_t k = 0; k < g.size(); ++k) (*gx)[k] += 2.0 * x[k] * g[k];
        return;
      }
      case OpKind::Sum: {
        if (Matrix* gx = slot(i, 0))
          for (double& v : gx->values()) v += g[0];
        return;
      }
      case OpKind::MeanAll: {
        if (Matrix* gx = slot(i, 0)) {
          const double s = g[0] / static_cast<double>(gx->size());
          for (double& v : gx->values()) v += s;
        }
        return;
      }
      case OpKind::MeanRows: {
        if (Matrix* gx = slot(i, 0)) {
          const double inv = 1.0 / static_cast<double>(gx->rows());
          for (std::size_t r = 0; r < gx->rows(); ++r)
            for (std::size_t c = 0; c < gx->cols(); ++c) (*gx)(r, c) += g[c] * inv;
        }
        return;
      }
      case OpKind::ConcatCols: {
        const std::size_t left = nodes_[n.in[0]].value.cols();
        if (Matrix* ga = slot(i, 0))
          for (std::size_t r = 0; r < g.rows(); ++r)
            for (std::size_t c = 0; c < left; ++c) (*ga)(r, c) += g(r, c);
        if (Matrix* gb = slot(i, 1))
          for (std::size_t r = 0; r < g.rows(); ++r)
            for (std::size_t c = left; c < g.cols(); ++c) (*gb)(r, c - left) += g(r, c);
        return;
      }
      case OpKind::GatherPairs: {
        if (Matrix* gz = slot(i, 0)) {
          const std::size_t h = gz->cols();
          for (std::size_t e = 0; e < n.edges.size(); ++e) {
            auto src = g.row_span(e);
            auto du = gz->row_span(n.edges[e].u);
            auto dv = gz->row_span(n.edges[e].v);
            for (std::size_t c = 0; c < h; ++c) {
              du[c] += src[c];
              dv[c] += src[h + c];
            }
          }
        }
        return;
      }
      case OpKind::NormalizedAdjacency: {
        Matrix* gw = slot(i, 0);
        if (!gw) return;
        const Matrix& raw = n.cache;
        const Matrix& s = n.cache2;
        const std::size_t nn = raw.rows();
        // dL/dd_i through s_i = max(d_i, floor)^{-1/2}
        std::vector<double> d_deg(nn, 0.0);
        for (std::size_t r = 0; r < nn; ++r) {
          double acc = 0.0;
          for (std::size_t c = 0; c < nn; ++c) acc += (g(r, c) + g(c, r)) * raw(r, c) * s[c];
          double deg = 0.0;
          for (double v : raw.row_span(r)) deg += v;
          d_deg[r] = deg > kDegreeFloor ? acc * (-0.5) * s[r] * s[r] * s[r] : 0.0;
        }
        for (std::size_t e = 0; e < n.edges.size(); ++e) {
          const std::size_t u = n.edges[e].u, v = n.edges[e].v;
          (*gw)[e] += (g(u, v) + g(v, u)) * s[u] * s[v] + d_deg[u] + d_deg[v];
        }
        return;
      }
      case OpKind::Softmax: {
        if (Matrix* gx = slot(i, 0)) {
          for (std::size_t r = 0; r < g.rows(); ++r) {
            double dot = 0.0;
            for (std::size_t c = 0; c < g.cols(); ++c) dot += g(r, c) * n.value(r, c);
            for (std::size_t c = 0; c < g.cols(); ++c)
              (*gx)(r, c) += n.value(r, c) * (g(r, c) - dot);
          }
        }
        return;
      }
      case OpKind::SoftmaxCrossEntropy: {
        if (Matrix* gx = slot(i, 0)) {
          for (std::size_t c = 0; c < gx->cols(); ++c) {
            const double onehot = c == n.index ? 1.0 : 0.0;
            (*gx)[c] += g[0] * (n.cache[c] - onehot);
          }
        }
        return;
      }
      case OpKind::Pick: {
        if (Matrix* gx = slot(i, 0)) (*gx)[n.index] += g[0];
        return;
      }
      case OpKind::BinaryEntropyMean: {
        const Matrix& x = nodes_[n.in[0]].value;
        if (Matrix* gx = slot(i, 0)) {
          const double inv = 1.0 / static_cast<double>(x.size());
          for (std::size_t k = 0; k < x.size(); ++k) {
            const double p = x[k];
            (*gx)[k] += g[0] * inv * (std::log1p(-p) - std::log(p));
          }
        }
        return;
      }
    }
  }

  std::vector<Node> nodes_;
};

}  // namespace gibconf
