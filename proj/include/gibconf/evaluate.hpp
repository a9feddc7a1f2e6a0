#pragma once

// Evaluation of a trained explainer (optionally with its confidence model) on a graph set,
// with optional feature-level or embedding-level noise.

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "gibconf/confidence.hpp"
#include "gibconf/explainer.hpp"
#include "gibconf/gcn.hpp"
#include "gibconf/metrics.hpp"
#include "gibconf/trainer.hpp"

namespace gibconf {

struct MetricRecord {
  std::string run_id;
  std::uint64_t seed = 0;
  double noise_level = 0.0;
  double auroc = 0.0;
  double nll = 0.0;
  double brier = 0.0;
  double ece = 0.0;
  double pearson = 0.0;
  double mean_confidence = 0.0;

  bool operator==(const MetricRecord&) const = default;
};

struct GraphRow {
  std::size_t graph_id = 0;
  double auc = 0.0;
  double graph_confidence = 0.0;

  bool operator==(const GraphRow&) const = default;
};

/// One line of the explanation dump.
struct EdgeRow {
  std::size_t graph_id = 0;
  std::size_t u = 0;
  std::size_t v = 0;
  double mask = 0.0;
  double confidence = 0.0;
  std::uint8_t gt = 0;
  /// Explainer logit; ranks edges like `mask` but without saturating at the clamp bounds.
  /// Not written to the dump; readers recover it from `mask`.
  double logit = 0.0;

  bool operator==(const EdgeRow&) const = default;
};

inline double mask_logit(double m) { return std::log(m) - std::log1p(-m); }

struct RunResult {
  std::vector<GraphRow> graphs;
  std::vector<EdgeRow> edges;
  MetricRecord record;
  std::vector<EpochLoss> losses;
  double seconds = 0.0;
};

/// Adds eps to every feature entry.
inline Graph inject_feature_noise(const Graph& g, double eps) {
  if (!(eps >= 0.0)) throw ParameterError("noise level must be non-negative");
  Graph out = g;
  for (double& v : out.features.values()) v += eps;
  return out;
}

/// Adds eps * N(0, 1) to every embedding entry.
inline Matrix inject_embedding_noise(const Matrix& z, double eps, std::uint64_t seed) {
  if (!(eps >= 0.0)) throw ParameterError("noise level must be non-negative");
  Matrix out = z;
  if (eps == 0.0) return out;
  Matrix n = gaussian_sample(z.rows(), z.cols(), seed);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += eps * n[i];
  return out;
}

enum class NoiseKind { None, Feature, Embedding };

struct EvalNoise {
  NoiseKind kind = NoiseKind::None;
  double level = 0.0;
  std::uint64_t seed = 0;
};

struct EvalOptions {
  std::string run_id = "run";
  std::uint64_t seed = 0;
  std::size_t bins = 10;
  EvalNoise noise;
};

inline void require_ground_truth(std::span<const LabeledGraph> graphs, std::span<const std::size_t> ids) {
  std::string missing;
  std::size_t count = 0;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    if (!graphs[i].gt_mask) {
      if (count++ < 20) missing += (missing.empty() ? "" : ",") + std::to_string(ids[i]);
    }
  }
  if (count > 0) {
    throw ContractError("graphs without ground-truth masks: " + missing +
                        (count > 20 ? ",... (" + std::to_string(count) + " total)" : ""));
  }
}

/// Per-edge explanation scores with optional per-edge confidences for one graph.
struct GraphExplanation {
  std::vector<double> logits;
  EdgeMask mask;
  std::optional<ConfidenceScores> confidence;
};

inline GraphExplanation explain_graph(const ExplainerParams& explainer,
                                      const ConfidenceParams* confidence, const GcnParams& f,
                                      const Graph& g, const EvalNoise& noise, std::size_t graph_id) {
  Graph noised = noise.kind == NoiseKind::Feature ? inject_feature_noise(g, noise.level) : g;
  Matrix z = gcn_forward(f, noised).z;
  if (noise.kind == NoiseKind::Embedding) {
    z = inject_embedding_noise(z, noise.level, Rng(noise.seed).split(graph_id).seed());
  }
  Matrix rows = edge_inputs(z, g.edges);
  Matrix omega = explainer_logits(explainer, rows);
  GraphExplanation out{{omega.values().begin(), omega.values().end()},
                       deterministic_mask(omega.values()),
                       std::nullopt};
  if (confidence) out.confidence = confidence_forward(*confidence, rows, out.mask);
  return out;
}

namespace detail {
inline double auc_or_nan(const ScoredEdges& s) {
  try {
    return roc_auc(s);
  } catch (const UndefinedMetricError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

/// Pearson over rows whose AUC is defined; NaN when undefined.
inline double row_pearson(std::span<const GraphRow> rows) {
  std::vector<double> a, c;
  for (const auto& r : rows) {
    if (std::isnan(r.auc)) continue;
    a.push_back(r.auc);
    c.push_back(r.graph_confidence);
  }
  try {
    return pearson(a, c);
  } catch (const UndefinedMetricError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}
}  // namespace detail

/// Aggregate record from per-graph rows and the edge dump. AUC ranks by logit; the
/// calibration metrics use the mask. Graphs without a confidence model carry confidence 1.
inline MetricRecord summarize(std::span<const GraphRow> graphs, std::span<const EdgeRow> edges,
                              const EvalOptions& opt) {
  ScoredEdges all, ranked;
  for (const auto& e : edges) {
    all.scores.push_back(e.mask);
    all.labels.push_back(e.gt);
    ranked.scores.push_back(e.logit);
  }
  ranked.labels = all.labels;
  MetricRecord r;
  r.run_id = opt.run_id;
  r.seed = opt.seed;
  r.noise_level = opt.noise.kind == NoiseKind::None ? 0.0 : opt.noise.level;
  r.auroc = roc_auc(ranked);
  r.nll = nll_binary(all);
  r.brier = brier(all);
  r.ece = ece(all, opt.bins);
  r.pearson = detail::row_pearson(graphs);
  double sum = 0.0;
  for (const auto& g : graphs) sum += g.graph_confidence;
  r.mean_confidence = graphs.empty() ? 0.0 : sum / static_cast<double>(graphs.size());
  return r;
}

namespace detail {
inline std::vector<std::size_t> resolve_ids(std::size_t n, std::span<const std::size_t> ids) {
  if (ids.empty()) {
    std::vector<std::size_t> out(n);
    std::iota(out.begin(), out.end(), 0);
    return out;
  }
  if (ids.size() != n) throw DimensionError("graph id count does not match graph count");
  return {ids.begin(), ids.end()};
}
}  // namespace detail

/// Scores precomputed explanations against ground truth. `ids` names each graph in the
/// output and defaults to positions 0..n-1.
inline RunResult evaluate_explanations(std::span<const LabeledGraph> graphs,
                                       std::span<const GraphExplanation> explanations,
                                       const EvalOptions& opt = {},
                                       std::span<const std::size_t> ids = {}) {
  if (graphs.empty()) throw ContractError("evaluation needs at least one graph");
  if (explanations.size() != graphs.size()) {
    throw DimensionError("evaluation: " + std::to_string(explanations.size()) +
                         " explanations for " + std::to_string(graphs.size()) + " graphs");
  }
  const auto names = detail::resolve_ids(graphs.size(), ids);
  require_ground_truth(graphs, names);
  RunResult out;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const Graph& g = graphs[i].graph;
    const auto& ex = explanations[i];
    const auto& gt = *graphs[i].gt_mask;
    if (ex.mask.size() != g.num_edges() || ex.logits.size() != g.num_edges()) {
      throw DimensionError("explanation of graph " + std::to_string(names[i]) +
                           " does not match its edge count");
    }
    ScoredEdges s;
    s.scores = ex.logits;
    s.labels = gt;
    GraphRow row{names[i], detail::auc_or_nan(s), 1.0};
    if (ex.confidence) row.graph_confidence = ex.confidence->graph_confidence;
    out.graphs.push_back(row);
    for (std::size_t e = 0; e < g.num_edges(); ++e) {
      out.edges.push_back({names[i], g.edges[e].u, g.edges[e].v, ex.mask[e],
                           ex.confidence ? ex.confidence->per_edge[e] : 1.0, gt[e], ex.logits[e]});
    }
  }
  out.record = summarize(out.graphs, out.edges, opt);
  return out;
}

/// Explanation built from a mask alone (baselines and ensembles).
inline GraphExplanation from_mask(EdgeMask m) {
  GraphExplanation out;
  for (double w : m.weights) out.logits.push_back(mask_logit(w));
  out.mask = std::move(m);
  return out;
}

inline RunResult evaluate_explainer(const ExplainerParams& explainer,
                                    const ConfidenceParams* confidence, const GcnParams& f,
                                    std::span<const LabeledGraph> graphs, const EvalOptions& opt = {},
                                    std::span<const std::size_t> ids = {}) {
  detail::check_model(f);
  if (graphs.empty()) throw ContractError("evaluate_explainer: no graphs");
  const auto names = detail::resolve_ids(graphs.size(), ids);
  require_ground_truth(graphs, names);
  const auto start = std::chrono::steady_clock::now();
  std::vector<GraphExplanation> explanations;
  explanations.reserve(graphs.size());
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    explanations.push_back(explain_graph(explainer, confidence, f, graphs[i].graph, opt.noise, names[i]));
  }
  RunResult out = evaluate_explanations(graphs, explanations, opt, names);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

/// Per-graph rows and aggregate metrics recomputed from an explanation dump.
inline RunResult evaluate_dump(std::span<const EdgeRow> edges, const EvalOptions& opt = {}) {
  RunResult out;
  out.edges.assign(edges.begin(), edges.end());
  std::size_t i = 0;
  while (i < edges.size()) {
    std::size_t j = i;
    ScoredEdges s;
    double conf = 0.0;
    while (j < edges.size() && edges[j].graph_id == edges[i].graph_id) {
      s.scores.push_back(edges[j].logit);
      s.labels.push_back(edges[j].gt);
      conf += edges[j].confidence;
      ++j;
    }
    out.graphs.push_back({edges[i].graph_id, detail::auc_or_nan(s), conf / static_cast<double>(j - i)});
    i = j;
  }
  out.record = summarize(out.graphs, out.edges, opt);
  return out;
}

inline const std::vector<double>& default_noise_grid() {
  static const std::vector<double> grid{0.0, 0.001, 0.01, 0.05, 0.1, 0.2, 0.5, 1.0};
  return grid;
}

/// One evaluation per noise level.
inline std::vector<RunResult> run_noise_sweep(const ExplainerParams& explainer,
                                              const ConfidenceParams* confidence,
                                              const GcnParams& f, std::span<const LabeledGraph> graphs,
                                              std::span<const double> grid, NoiseKind kind,
                                              const EvalOptions& base = {}) {
  if (grid.empty()) throw ParameterError("noise grid is empty");
  if (!std::is_sorted(grid.begin(), grid.end())) throw ParameterError("noise grid must be sorted ascending");
  std::vector<RunResult> out;
  for (double eps : grid) {
    EvalOptions opt = base;
    opt.noise = {kind, eps, base.noise.seed};
    out.push_back(evaluate_explainer(explainer, confidence, f, graphs, opt));
  }
  return out;
}

}  // namespace gibconf
