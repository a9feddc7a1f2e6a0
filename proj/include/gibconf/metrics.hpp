#pragma once

// Explanation fidelity (ROC AUC) and calibration metrics over per-edge scores.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "gibconf/errors.hpp"

namespace gibconf {

/// Per-edge scores in [0, 1] against binary ground truth.
struct ScoredEdges {
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;

  void append(std::span<const double> s, std::span<const std::uint8_t> l) {
    scores.insert(scores.end(), s.begin(), s.end());
    labels.insert(labels.end(), l.begin(), l.end());
  }
};

namespace detail {
inline void check(const ScoredEdges& s, const char* who) {
  if (s.scores.size() != s.labels.size()) {
    throw DimensionError(std::string(who) + ": " + std::to_string(s.scores.size()) +
                         " scores but " + std::to_string(s.labels.size()) + " labels");
  }
  for (auto l : s.labels)
    if (l > 1) throw ContractError(std::string(who) + ": labels must be 0 or 1");
}
}  // namespace detail

inline constexpr double kProbClip = 1e-12;

/// P(random positive outranks random negative), ties counted 1/2. Rank-sum form.
inline double roc_auc(const ScoredEdges& s) {
  detail::check(s, "roc_auc");
  const std::size_t n = s.scores.size();
  std::size_t pos = 0;
  for (auto l : s.labels) pos += l;
  const std::size_t neg = n - pos;
  if (pos == 0 || neg == 0) throw UndefinedMetricError("roc_auc needs both positive and negative labels");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return s.scores[a] < s.scores[b]; });
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && s.scores[order[j]] == s.scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k)
      if (s.labels[order[k]]) rank_sum += avg_rank;
    i = j;
  }
  const double p = static_cast<double>(pos), q = static_cast<double>(neg);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * q);
}

/// Binary cross-entropy with probabilities clipped to [1e-12, 1 - 1e-12].
inline double nll_binary(const ScoredEdges& s) {
  detail::check(s, "nll_binary");
  if (s.scores.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < s.scores.size(); ++i) {
    const double p = std::clamp(s.scores[i], kProbClip, 1.0 - kProbClip);
    total += s.labels[i] ? -std::log(p) : -std::log1p(-p);
  }
  return total / static_cast<double>(s.scores.size());
}

inline double brier(const ScoredEdges& s) {
  detail::check(s, "brier");
  if (s.scores.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < s.scores.size(); ++i) {
    const double d = s.scores[i] - static_cast<double>(s.labels[i]);
    total += d * d;
  }
  return total / static_cast<double>(s.scores.size());
}

/// Bin k covers (k/K, (k+1)/K]; the first bin also takes 0.
inline std::size_t ece_bin(double p, std::size_t bins) {
  for (std::size_t k = 0; k + 1 < bins; ++k)
    if (p <= static_cast<double>(k + 1) / static_cast<double>(bins)) return k;
  return bins - 1;
}

/// Equal-width-bin calibration error with yhat = 1(p >= 0.5):
/// sum_k |sum_{i in B_k} [1(yhat_i == y_i) - p_i]| / n.
inline double ece(const ScoredEdges& s, std::size_t bins = 10) {
  detail::check(s, "ece");
  if (bins < 1) throw ParameterError("ece: need at least one bin");
  if (s.scores.empty()) return 0.0;
  std::vector<double> gap(bins, 0.0);
  for (std::size_t i = 0; i < s.scores.size(); ++i) {
    const double p = s.scores[i];
    const std::uint8_t yhat = p >= 0.5 ? 1 : 0;
    gap[ece_bin(p, bins)] += (yhat == s.labels[i] ? 1.0 : 0.0) - p;
  }
  double total = 0.0;
  for (double g : gap) total += std::abs(g);
  return total / static_cast<double>(s.scores.size());
}

/// Sample Pearson correlation.
inline double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionError("pearson: lengths differ");
  if (x.size() < 2) throw UndefinedMetricError("pearson: need at least two points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedMetricError("pearson: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// Spearman rank correlation (average ranks for ties).
inline double spearman(std::span<const double> x, std::span<const double> y) {
  auto ranks = [](std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size();) {
      std::size_t j = i;
      while (j < v.size() && v[order[j]] == v[order[i]]) ++j;
      for (std::size_t k = i; k < j; ++k) r[order[k]] = 0.5 * static_cast<double>(i + j - 1);
      i = j;
    }
    return r;
  };
  auto rx = ranks(x);
  auto ry = ranks(y);
  return pearson(rx, ry);
}

}  // namespace gibconf
