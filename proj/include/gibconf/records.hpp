#pragma once

// CSV files written by the experiment drivers, and readers for the ones consumed again.

#include <charconv>
#include <cmath>
#include <filesystem>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gibconf/errors.hpp"
#include "gibconf/evaluate.hpp"
#include "gibconf/io.hpp"

namespace gibconf {

/// Shortest decimal text that parses back to the same double; "nan"/"inf" for non-finite.
inline std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

inline double parse_real(std::string_view s, std::size_t line) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError(line, "not a number: '" + std::string(s) + "'");
  }
  return v;
}

inline std::uint64_t parse_unsigned(std::string_view s, std::size_t line) {
  std::uint64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty()) {
    throw ParseError(line, "not an unsigned integer: '" + std::string(s) + "'");
  }
  return v;
}

namespace detail {
inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::vector<std::string_view> csv_lines(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start < text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.push_back(line);
    start = nl + 1;
  }
  return out;
}

inline void require_header(const std::vector<std::string_view>& lines, std::string_view header) {
  if (lines.empty() || lines[0] != header) {
    throw ParseError(1, "expected header '" + std::string(header) + "'");
  }
}

inline std::string checked_id(const std::string& id) {
  if (id.find_first_of(",\n\r\"") != std::string::npos) {
    throw ContractError("run id must not contain commas, quotes or line breaks: " + id);
  }
  return id;
}
}  // namespace detail

inline constexpr std::string_view kMetricHeader =
    "run_id,seed,noise_level,auroc,nll,brier,ece,pearson,mean_confidence";
inline constexpr std::string_view kGraphHeader = "graph_id,auc,graph_confidence";
inline constexpr std::string_view kLossHeader = "epoch,phase,gib,conf,total";
inline constexpr std::string_view kDumpHeader = "graph_id,edge_u,edge_v,mask,confidence,gt";
inline constexpr std::string_view kLambdaHeader = "lambda,auroc";
inline constexpr std::string_view kTimingHeader = "edges,seconds,slope,intercept,r2";

inline std::string metric_csv(std::span<const MetricRecord> records) {
  std::ostringstream out;
  out << kMetricHeader << '\n';
  for (const auto& r : records) {
    out << detail::checked_id(r.run_id) << ',' << r.seed << ',' << format_real(r.noise_level) << ','
        << format_real(r.auroc) << ',' << format_real(r.nll) << ',' << format_real(r.brier) << ','
        << format_real(r.ece) << ',' << format_real(r.pearson) << ','
        << format_real(r.mean_confidence) << '\n';
  }
  return out.str();
}

inline std::vector<MetricRecord> parse_metric_csv(std::string_view text) {
  auto lines = detail::csv_lines(text);
  detail::require_header(lines, kMetricHeader);
  std::vector<MetricRecord> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto f = detail::split_fields(lines[i]);
    if (f.size() != 9) throw ParseError(i + 1, "expected 9 fields");
    MetricRecord r;
    r.run_id = std::string(f[0]);
    r.seed = parse_unsigned(f[1], i + 1);
    r.noise_level = parse_real(f[2], i + 1);
    r.auroc = parse_real(f[3], i + 1);
    r.nll = parse_real(f[4], i + 1);
    r.brier = parse_real(f[5], i + 1);
    r.ece = parse_real(f[6], i + 1);
    r.pearson = parse_real(f[7], i + 1);
    r.mean_confidence = parse_real(f[8], i + 1);
    out.push_back(std::move(r));
  }
  return out;
}

inline std::string graph_csv(std::span<const GraphRow> rows) {
  std::ostringstream out;
  out << kGraphHeader << '\n';
  for (const auto& r : rows)
    out << r.graph_id << ',' << format_real(r.auc) << ',' << format_real(r.graph_confidence) << '\n';
  return out.str();
}

inline std::vector<GraphRow> parse_graph_csv(std::string_view text) {
  auto lines = detail::csv_lines(text);
  detail::require_header(lines, kGraphHeader);
  std::vector<GraphRow> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto f = detail::split_fields(lines[i]);
    if (f.size() != 3) throw ParseError(i + 1, "expected 3 fields");
    out.push_back({parse_unsigned(f[0], i + 1), parse_real(f[1], i + 1), parse_real(f[2], i + 1)});
  }
  return out;
}

inline std::string loss_csv(std::span<const EpochLoss> losses) {
  std::ostringstream out;
  out << kLossHeader << '\n';
  for (const auto& l : losses) {
    out << l.epoch << ',' << (l.phase == Phase::Explainer ? "explainer" : "confidence") << ','
        << format_real(l.gib) << ',' << format_real(l.conf) << ',' << format_real(l.total) << '\n';
  }
  return out.str();
}

inline std::string dump_csv(std::span<const EdgeRow> rows) {
  std::ostringstream out;
  out << kDumpHeader << '\n';
  for (const auto& r : rows) {
    out << r.graph_id << ',' << r.u << ',' << r.v << ',' << format_real(r.mask) << ','
        << format_real(r.confidence) << ',' << static_cast<int>(r.gt) << '\n';
  }
  return out.str();
}

/// Rows of an explanation dump; each logit is recovered from its mask.
inline std::vector<EdgeRow> parse_dump_csv(std::string_view text) {
  auto lines = detail::csv_lines(text);
  detail::require_header(lines, kDumpHeader);
  std::vector<EdgeRow> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto f = detail::split_fields(lines[i]);
    if (f.size() != 6) throw ParseError(i + 1, "expected 6 fields");
    EdgeRow r;
    r.graph_id = parse_unsigned(f[0], i + 1);
    r.u = parse_unsigned(f[1], i + 1);
    r.v = parse_unsigned(f[2], i + 1);
    r.mask = parse_real(f[3], i + 1);
    r.confidence = parse_real(f[4], i + 1);
    const auto gt = parse_unsigned(f[5], i + 1);
    if (gt > 1) throw ParseError(i + 1, "gt must be 0 or 1");
    if (!(r.mask > 0.0 && r.mask < 1.0)) throw ParseError(i + 1, "mask must lie in (0, 1)");
    r.gt = static_cast<std::uint8_t>(gt);
    r.logit = mask_logit(r.mask);
    out.push_back(r);
  }
  return out;
}

inline std::string lambda_csv(std::span<const double> lambdas, std::span<const double> aucs) {
  std::ostringstream out;
  out << kLambdaHeader << '\n';
  for (std::size_t i = 0; i < lambdas.size(); ++i)
    out << format_real(lambdas[i]) << ',' << format_real(aucs[i]) << '\n';
  return out.str();
}

}  // namespace gibconf
