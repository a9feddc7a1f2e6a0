#pragma once

// Experiment drivers: ablations, lambda sweep, explainer ensembles, the embedding-noise
// case study and the confidence-scoring timing benchmark.

#include <algorithm>
#include <chrono>
#include <string>
#include <vector>

#include "gibconf/evaluate.hpp"
#include "gibconf/generator.hpp"
#include "gibconf/records.hpp"

namespace gibconf {

enum class AblationMode { Full, NoConfLoss, NoConfModule };

inline std::string to_string(AblationMode m) {
  switch (m) {
    case AblationMode::Full: return "full";
    case AblationMode::NoConfLoss: return "no_conf_loss";
    case AblationMode::NoConfModule: return "no_conf_module";
  }
  return "full";
}

inline AblationMode parse_ablation_mode(const std::string& s) {
  if (s == "full") return AblationMode::Full;
  if (s == "no_conf_loss") return AblationMode::NoConfLoss;
  if (s == "no_conf_module") return AblationMode::NoConfModule;
  throw ParameterError("unknown ablation mode '" + s + "'");
}

struct TrainedRun {
  TrainedExplainer models;
  RunResult result;
};

/// Trains on the train split and evaluates on `eval` (all graphs when empty).
inline TrainedRun run_ablation(AblationMode mode, const Dataset& d, const GcnParams& f,
                               const TrainConfig& cfg, std::span<const std::size_t> eval = {}) {
  const auto train = select(d, d.train);
  TrainConfig c = cfg;
  TrainedRun out;
  switch (mode) {
    case AblationMode::Full:
      out.models = train_confexplainer(train, f, c);
      break;
    case AblationMode::NoConfLoss:
      c.lambda = 0.0;
      out.models = train_confexplainer(train, f, c);
      break;
    case AblationMode::NoConfModule:
      out.models = train_vanilla_explainer(train, f, c);
      break;
  }
  std::vector<std::size_t> ids(eval.begin(), eval.end());
  if (ids.empty()) {
    ids.resize(d.graphs.size());
    std::iota(ids.begin(), ids.end(), 0);
  }
  EvalOptions opt{to_string(mode), cfg.seed, cfg.bins, {}};
  const ConfidenceParams* conf = out.models.confidence ? &*out.models.confidence : nullptr;
  out.result = evaluate_explainer(out.models.explainer, conf, f, select(d, ids), opt, ids);
  out.result.losses = out.models.losses;
  out.result.seconds = out.models.seconds;
  return out;
}

inline const std::vector<double>& default_lambda_grid() {
  static const std::vector<double> grid{0.0, 0.001, 0.01, 0.1, 1.0, 10.0, 100.0, 1000.0};
  return grid;
}

struct LambdaPoint {
  double lambda = 0.0;
  RunResult result;
};

inline std::vector<LambdaPoint> run_lambda_sweep(const Dataset& d, const GcnParams& f,
                                                 const TrainConfig& cfg, std::span<const double> grid) {
  if (grid.empty()) throw ParameterError("lambda grid is empty");
  std::vector<LambdaPoint> out;
  for (double lambda : grid) {
    TrainConfig c = cfg;
    c.lambda = lambda;
    auto run = run_ablation(AblationMode::Full, d, f, c);
    run.result.record.run_id = "lambda=" + format_real(lambda);
    out.push_back({lambda, std::move(run.result)});
  }
  return out;
}

enum class EnsembleKind { Deep, Bootstrap };

inline EnsembleKind parse_ensemble_kind(const std::string& s) {
  if (s == "deep") return EnsembleKind::Deep;
  if (s == "bootstrap") return EnsembleKind::Bootstrap;
  throw ParameterError("unknown ensemble kind '" + s + "'");
}

/// Fold index of every train-split position: a seeded permutation dealt round-robin.
inline std::vector<std::size_t> bootstrap_folds(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ParameterError("ensembles need k >= 2");
  if (k > n) throw ParameterError("k exceeds the number of training graphs");
  std::vector<std::size_t> order(n), fold(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng.engine());
  for (std::size_t i = 0; i < n; ++i) fold[order[i]] = i % k;
  return fold;
}

struct EnsembleResult {
  /// One mean mask per dataset graph.
  std::vector<EdgeMask> masks;
  std::vector<TrainedExplainer> members;
};

/// Per-edge masks of every dataset graph under one explainer.
inline std::vector<EdgeMask> explainer_masks(const ExplainerParams& e, const GcnParams& f,
                                             std::span<const LabeledGraph> graphs) {
  std::vector<EdgeMask> out;
  out.reserve(graphs.size());
  for (const auto& lg : graphs) {
    Matrix z = gcn_forward(f, lg.graph).z;
    out.push_back(deterministic_mask(explainer_logits(e, edge_inputs(z, lg.graph.edges)).values()));
  }
  return out;
}

/// Deep: k baseline explainers seeded seed+i on the full train split, masks averaged.
/// Bootstrap: member i trains without fold i; train graphs take the mask of the member
/// that held them out, other graphs the mean over members. `same_seed` gives every
/// member the base seed.
inline EnsembleResult train_ensemble(EnsembleKind kind, std::size_t k, const Dataset& d,
                                     const GcnParams& f, const TrainConfig& cfg,
                                     bool same_seed = false) {
  if (k < 2) throw ParameterError("ensembles need k >= 2");
  if (k > d.train.size()) throw ParameterError("k exceeds the number of training graphs");
  EnsembleResult out;
  std::vector<std::vector<EdgeMask>> member_masks;
  const auto folds = kind == EnsembleKind::Bootstrap
                         ? bootstrap_folds(d.train.size(), k, mix64(cfg.seed ^ 0xb007))
                         : std::vector<std::size_t>{};
  for (std::size_t i = 0; i < k; ++i) {
    TrainConfig c = cfg;
    c.seed = same_seed ? cfg.seed : cfg.seed + i;
    std::vector<std::size_t> ids;
    for (std::size_t t = 0; t < d.train.size(); ++t)
      if (kind == EnsembleKind::Deep || folds[t] != i) ids.push_back(d.train[t]);
    out.members.push_back(train_vanilla_explainer(select(d, ids), f, c));
    member_masks.push_back(explainer_masks(out.members.back().explainer, f, d.graphs));
  }
  std::vector<std::ptrdiff_t> held_out(d.graphs.size(), -1);
  if (kind == EnsembleKind::Bootstrap)
    for (std::size_t t = 0; t < d.train.size(); ++t) held_out[d.train[t]] = static_cast<std::ptrdiff_t>(folds[t]);
  for (std::size_t g = 0; g < d.graphs.size(); ++g) {
    if (held_out[g] >= 0) {
      out.masks.push_back(member_masks[static_cast<std::size_t>(held_out[g])][g]);
      continue;
    }
    EdgeMask mean;
    mean.weights.assign(d.graphs[g].graph.num_edges(), 0.0);
    for (const auto& mm : member_masks)
      for (std::size_t e = 0; e < mean.size(); ++e) mean.weights[e] += mm[g][e];
    for (double& w : mean.weights) w /= static_cast<double>(k);
    out.masks.push_back(std::move(mean));
  }
  return out;
}

inline RunResult evaluate_masks(std::span<const LabeledGraph> graphs, std::span<const EdgeMask> masks,
                                const EvalOptions& opt = {}, std::span<const std::size_t> ids = {}) {
  std::vector<GraphExplanation> ex;
  ex.reserve(masks.size());
  for (const auto& m : masks) ex.push_back(from_mask(m));
  return evaluate_explanations(graphs, ex, opt, ids);
}

inline const std::vector<double>& default_case_study_levels() {
  static const std::vector<double> levels{0.0, 0.05, 0.1, 0.2};
  return levels;
}

/// Explanations of the selected graphs under increasing embedding noise.
inline std::vector<RunResult> run_case_study(const ExplainerParams& explainer,
                                             const ConfidenceParams& confidence, const GcnParams& f,
                                             const Dataset& d, std::span<const std::size_t> ids,
                                             std::span<const double> levels, std::uint64_t seed) {
  EvalOptions base;
  base.run_id = "case_study";
  base.seed = seed;
  base.noise.seed = seed;
  auto graphs = select(d, std::vector<std::size_t>(ids.begin(), ids.end()));
  std::vector<RunResult> out;
  for (double eps : levels) {
    EvalOptions opt = base;
    opt.noise = {NoiseKind::Embedding, eps, seed};
    out.push_back(evaluate_explainer(explainer, &confidence, f, graphs, opt, ids));
  }
  return out;
}

struct TimingPoint {
  std::size_t edges = 0;
  double seconds = 0.0;
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

inline LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw DimensionError("fit_line needs two or more paired points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw UndefinedMetricError("fit_line: x has zero variance");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

struct ComplexityReport {
  std::vector<TimingPoint> points;
  LinearFit fit;
};

/// Wall-clock of edge-input construction plus confidence scoring on preferential-attachment
/// trees with the requested edge counts. Each point is the fastest of `repeats` timed batches.
inline ComplexityReport confidence_timing(const GcnParams& f, const ConfidenceParams& confidence,
                                          std::span<const std::size_t> edge_counts,
                                          std::uint64_t seed, std::size_t repeats = 7) {
  ComplexityReport out;
  Rng root(seed);
  for (std::size_t target : edge_counts) {
    Rng rng = root.split(target);
    Graph g = generate_ba_base(target + 1, 1, rng);
    g.features = make_node_features(g, NodeFeatures::DegreeOneHot, f.feature_dim, 0.1);
    Matrix z = gcn_forward(f, g).z;
    EdgeMask m;
    m.weights.assign(g.num_edges(), 0.5);
    double best = 1e300;
    for (std::size_t r = 0; r < repeats; ++r) {
      std::size_t iters = 0;
      const auto start = std::chrono::steady_clock::now();
      double elapsed = 0.0;
      double sink = 0.0;
      while (elapsed < 0.02) {
        sink += confidence_forward(confidence, edge_inputs(z, g.edges), m).graph_confidence;
        ++iters;
        elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      }
      if (sink < 0.0) throw ContractError("negative confidence");
      best = std::min(best, elapsed / static_cast<double>(iters));
    }
    out.points.push_back({g.num_edges(), best});
  }
  std::vector<double> x, y;
  for (const auto& p : out.points) {
    x.push_back(static_cast<double>(p.edges));
    y.push_back(p.seconds);
  }
  out.fit = fit_line(x, y);
  return out;
}

}  // namespace gibconf
