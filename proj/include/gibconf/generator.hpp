#pragma once

// Synthetic two-motif graph classification data: a preferential-attachment base
// graph with either a 5-cycle (class 0) or a house (class 1) attached by one
// bridge edge. Motif-internal edges form the ground-truth explanation.

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gibconf/errors.hpp"
#include "gibconf/graph.hpp"
#include "gibconf/rng.hpp"

namespace gibconf {

enum class MotifKind { Cycle, House };

enum class NodeFeatures {
  /// Every entry equals DatasetConfig::feature_value.
  Constant,
  /// One-hot of min(degree, feature_dim - 1).
  DegreeOneHot,
};

struct DatasetConfig {
  std::size_t num_graphs = 1000;
  std::size_t base_n = 20;
  std::size_t base_m = 1;
  std::size_t feature_dim = 10;
  NodeFeatures node_features = NodeFeatures::DegreeOneHot;
  double feature_value = 0.1;
  /// 5: square plus roof apex (6 edges). 6: 5-cycle plus apex (7 edges).
  std::size_t house_nodes = 5;
  double train_fraction = 0.8;
};

/// Preferential-attachment graph seeded with an m-clique. Features are left empty.
inline Graph generate_ba_base(std::size_t n, std::size_t m, Rng& rng) {
  if (m < 1 || n <= m) {
    throw ParameterError("generate_ba_base: need n > m >= 1, got n=" + std::to_string(n) +
                         " m=" + std::to_string(m));
  }
  Graph g;
  g.n = n;
  std::vector<std::size_t> degree(n, 0);
  for (std::size_t u = 0; u < m; ++u)
    for (std::size_t v = u + 1; v < m; ++v) {
      g.add_edge(u, v);
      ++degree[u];
      ++degree[v];
    }
  std::vector<std::size_t> targets;
  std::vector<char> taken(n, 0);
  for (std::size_t node = m; node < n; ++node) {
    targets.clear();
    for (std::size_t k = 0; k < m; ++k) {
      std::size_t total = 0;
      for (std::size_t c = 0; c < node; ++c)
        if (!taken[c]) total += degree[c];
      std::size_t pick = node;
      if (total == 0) {
        // No degree mass yet (single seed node): uniform over the free candidates.
        std::vector<std::size_t> free;
        for (std::size_t c = 0; c < node; ++c)
          if (!taken[c]) free.push_back(c);
        pick = free[rng.index(free.size())];
      } else {
        std::size_t r = static_cast<std::size_t>(rng.uniform() * static_cast<double>(total));
        if (r >= total) r = total - 1;
        for (std::size_t c = 0; c < node; ++c) {
          if (taken[c]) continue;
          if (r < degree[c]) {
            pick = c;
            break;
          }
          r -= degree[c];
        }
      }
      taken[pick] = 1;
      targets.push_back(pick);
    }
    for (std::size_t t : targets) {
      g.add_edge(t, node);
      ++degree[t];
      ++degree[node];
      taken[t] = 0;
    }
  }
  return g;
}

/// Local edge list of a motif over nodes 0..k-1.
inline std::pair<std::size_t, std::vector<Edge>> motif_edges(MotifKind kind, std::size_t house_nodes = 5) {
  std::vector<Edge> e;
  if (kind == MotifKind::Cycle) {
    for (std::size_t i = 0; i < 5; ++i) e.push_back({std::min(i, (i + 1) % 5), std::max(i, (i + 1) % 5)});
    return {5, e};
  }
  if (house_nodes == 5) {
    e = {{0, 1}, {1, 2}, {2, 3}, {0, 3}, {0, 4}, {1, 4}};
    return {5, e};
  }
  if (house_nodes == 6) {
    for (std::size_t i = 0; i < 5; ++i) e.push_back({std::min(i, (i + 1) % 5), std::max(i, (i + 1) % 5)});
    e.push_back({0, 5});
    e.push_back({1, 5});
    return {6, e};
  }
  throw ParameterError("house motif must have 5 or 6 nodes");
}

/// Appends the motif after the base nodes and joins it with one bridge edge.
/// Feature rows are extended by copying row 0's values (or zeros if absent).
inline std::pair<Graph, std::vector<std::uint8_t>> attach_motif(const Graph& base, MotifKind kind,
                                                                Rng& rng,
                                                                std::size_t house_nodes = 5) {
  if (base.n == 0) throw ParameterError("attach_motif: base graph is empty");
  auto [k, local] = motif_edges(kind, house_nodes);
  Graph g = base;
  const std::size_t offset = base.n;
  g.n = base.n + k;
  std::vector<std::uint8_t> gt(base.edges.size(), 0);
  for (const Edge& e : local) {
    g.add_edge(e.u + offset, e.v + offset);
    gt.push_back(1);
  }
  const std::size_t anchor = rng.index(base.n);
  const std::size_t entry = offset + rng.index(k);
  g.add_edge(anchor, entry);
  gt.push_back(0);
  if (base.features.cols() > 0) {
    Matrix f(g.n, base.features.cols());
    for (std::size_t r = 0; r < g.n; ++r) {
      const std::size_t src = r < base.n ? r : 0;
      std::copy(base.features.row_span(src).begin(), base.features.row_span(src).end(),
                f.row_span(r).begin());
    }
    g.features = std::move(f);
  } else {
    g.features = Matrix(g.n, 0);
  }
  if (g.edge_weights) g.edge_weights->resize(g.edges.size(), 1.0);
  return {std::move(g), std::move(gt)};
}

/// Stratified train/test split; both index lists come back sorted.
inline Dataset split_dataset(Dataset d, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ParameterError("split_dataset: train fraction must lie in (0, 1), got " +
                         std::to_string(train_fraction));
  }
  Rng rng(seed);
  d.train.clear();
  d.test.clear();
  for (std::size_t c = 0; c < d.num_classes; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < d.graphs.size(); ++i)
      if (d.graphs[i].label == c) members.push_back(i);
    std::shuffle(members.begin(), members.end(), rng.engine());
    const auto n_train = static_cast<std::size_t>(
        std::llround(train_fraction * static_cast<double>(members.size())));
    d.train.insert(d.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_train));
    d.test.insert(d.test.end(), members.begin() + static_cast<std::ptrdiff_t>(n_train), members.end());
  }
  std::sort(d.train.begin(), d.train.end());
  std::sort(d.test.begin(), d.test.end());
  return d;
}

inline Matrix make_node_features(const Graph& g, NodeFeatures kind, std::size_t dim, double value) {
  if (kind == NodeFeatures::Constant) return Matrix(g.n, dim, value);
  if (dim == 0) throw ParameterError("degree one-hot features need feature_dim >= 1");
  std::vector<std::size_t> degree(g.n, 0);
  for (const Edge& e : g.edges) {
    ++degree[e.u];
    ++degree[e.v];
  }
  Matrix f(g.n, dim);
  for (std::size_t i = 0; i < g.n; ++i) f(i, std::min(degree[i], dim - 1)) = 1.0;
  return f;
}

/// Balanced dataset: even indices carry a cycle (label 0), odd ones a house (label 1).
inline Dataset generate_dataset(const DatasetConfig& cfg, std::uint64_t seed) {
  if (cfg.num_graphs == 0 || cfg.num_graphs % 2 != 0) {
    throw ParameterError("generate_dataset: num_graphs must be a positive even number, got " +
                         std::to_string(cfg.num_graphs));
  }
  Dataset d;
  d.num_classes = 2;
  d.feature_dim = cfg.feature_dim;
  d.graphs.reserve(cfg.num_graphs);
  const Rng root(seed);
  for (std::size_t i = 0; i < cfg.num_graphs; ++i) {
    Rng rng = root.split(i);
    Graph base = generate_ba_base(cfg.base_n, cfg.base_m, rng);
    base.features = Matrix(base.n, cfg.feature_dim);
    const std::size_t label = i % 2;
    auto [g, gt] = attach_motif(base, label == 0 ? MotifKind::Cycle : MotifKind::House, rng,
                                cfg.house_nodes);
    g.features = make_node_features(g, cfg.node_features, cfg.feature_dim, cfg.feature_value);
    d.graphs.push_back({std::move(g), label, std::move(gt)});
  }
  return split_dataset(std::move(d), cfg.train_fraction, mix64(seed ^ 0x5b1175ULL));
}

}  // namespace gibconf
