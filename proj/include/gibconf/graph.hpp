#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gibconf/edge.hpp"
#include "gibconf/errors.hpp"
#include "gibconf/matrix.hpp"

namespace gibconf {

/// Undirected graph with node features. Edges are stored once, u < v.
struct Graph {
  std::size_t n = 0;
  Matrix features;
  std::vector<Edge> edges;
  std::optional<std::vector<double>> edge_weights;

  std::size_t num_edges() const noexcept { return edges.size(); }

  /// Adds {u, v} in canonical orientation; returns its index.
  std::size_t add_edge(std::size_t u, std::size_t v) {
    if (u > v) std::swap(u, v);
    edges.push_back({u, v});
    return edges.size() - 1;
  }

  friend bool operator==(const Graph&, const Graph&) = default;
};

/// Throws ContractError if the structural invariants do not hold.
inline void validate(const Graph& g) {
  if (g.features.rows() != g.n) {
    throw ContractError("graph has " + std::to_string(g.n) + " nodes but " +
                        std::to_string(g.features.rows()) + " feature rows");
  }
  std::set<Edge> seen;
  for (const Edge& e : g.edges) {
    if (e.u >= g.n || e.v >= g.n) throw ContractError("edge endpoint out of range");
    if (e.u == e.v) throw ContractError("self-loop in edge list");
    if (e.u > e.v) throw ContractError("edge not stored with u < v");
    if (!seen.insert(e).second) throw ContractError("duplicate undirected edge");
  }
  if (g.edge_weights && g.edge_weights->size() != g.edges.size()) {
    throw ContractError("edge weight count differs from edge count");
  }
}

struct LabeledGraph {
  Graph graph;
  std::size_t label = 0;
  /// 1 on edges belonging to the ground-truth explanation.
  std::optional<std::vector<std::uint8_t>> gt_mask;

  friend bool operator==(const LabeledGraph&, const LabeledGraph&) = default;
};

struct Dataset {
  std::vector<LabeledGraph> graphs;
  std::size_t num_classes = 2;
  std::size_t feature_dim = 0;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

inline void validate(const Dataset& d) {
  for (std::size_t i = 0; i < d.graphs.size(); ++i) {
    const LabeledGraph& lg = d.graphs[i];
    validate(lg.graph);
    if (lg.graph.features.cols() != d.feature_dim) {
      throw ContractError("graph " + std::to_string(i) + " has feature width " +
                          std::to_string(lg.graph.features.cols()) + ", dataset expects " +
                          std::to_string(d.feature_dim));
    }
    if (lg.label >= d.num_classes) {
      throw ContractError("graph " + std::to_string(i) + " label out of range");
    }
    if (lg.gt_mask && lg.gt_mask->size() != lg.graph.num_edges()) {
      throw ContractError("graph " + std::to_string(i) + " gt_mask length differs from edges");
    }
  }
  std::vector<int> seen(d.graphs.size(), 0);
  for (auto idx : d.train) {
    if (idx >= seen.size() || seen[idx]++) throw ContractError("invalid train split");
  }
  for (auto idx : d.test) {
    if (idx >= seen.size() || seen[idx]++) throw ContractError("splits overlap or out of range");
  }
  for (int s : seen)
    if (s != 1) throw ContractError("splits do not cover every graph");
}

/// Graphs selected by an index list, copied.
inline std::vector<LabeledGraph> select(const Dataset& d, const std::vector<std::size_t>& idx) {
  std::vector<LabeledGraph> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(d.graphs.at(i));
  return out;
}

}  // namespace gibconf
