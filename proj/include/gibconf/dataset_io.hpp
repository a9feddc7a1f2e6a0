#pragma once

// JSON Lines dataset format.
//
//   line 1: {"schema":"gibconf-graph/1","num_classes":2,"feature_dim":10,"num_graphs":1000}
//   line k: {"n":25,"edges":[[0,1],...],"features":[[...],...],"label":0,
//            "gt_mask":[0,1,...],"split":"train"}
//
// "num_graphs", "gt_mask" and "split" are optional. Files without split tags get a
// stratified 80/20 split with seed 0 on load.

#include <cstdint>
#include <filesystem>
#include <sstream>
#include <string>

#include <json.hpp>

#include "gibconf/errors.hpp"
#include "gibconf/generator.hpp"
#include "gibconf/graph.hpp"
#include "gibconf/io.hpp"

namespace gibconf {

inline constexpr const char* kDatasetSchema = "gibconf-graph/1";

inline std::string serialize_dataset(const Dataset& d) {
  using nlohmann::json;
  std::vector<char> is_train(d.graphs.size(), 0);
  for (auto i : d.train) is_train.at(i) = 1;
  std::string out;
  json header = {{"schema", kDatasetSchema},
                 {"num_classes", d.num_classes},
                 {"feature_dim", d.feature_dim},
                 {"num_graphs", d.graphs.size()}};
  out += header.dump() + "\n";
  for (std::size_t i = 0; i < d.graphs.size(); ++i) {
    const LabeledGraph& lg = d.graphs[i];
    json row;
    row["n"] = lg.graph.n;
    json edges = json::array();
    for (const Edge& e : lg.graph.edges) edges.push_back({e.u, e.v});
    row["edges"] = std::move(edges);
    json feats = json::array();
    for (std::size_t r = 0; r < lg.graph.features.rows(); ++r) {
      auto span = lg.graph.features.row_span(r);
      feats.push_back(std::vector<double>(span.begin(), span.end()));
    }
    row["features"] = std::move(feats);
    row["label"] = lg.label;
    if (lg.gt_mask) {
      json gt = json::array();
      for (auto b : *lg.gt_mask) gt.push_back(static_cast<int>(b));
      row["gt_mask"] = std::move(gt);
    }
    if (lg.graph.edge_weights) row["edge_weights"] = *lg.graph.edge_weights;
    row["split"] = is_train[i] ? "train" : "test";
    out += row.dump() + "\n";
  }
  return out;
}

inline Dataset parse_dataset(const std::string& text) {
  using nlohmann::json;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  Dataset d;
  bool have_header = false;
  std::optional<std::size_t> expected;
  bool any_split = false;
  std::vector<std::size_t> train, test;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& ex) {
      throw ParseError(lineno, std::string("invalid JSON: ") + ex.what());
    }
    try {
      if (!have_header) {
        const std::string schema = j.at("schema").get<std::string>();
        if (schema != kDatasetSchema) {
          throw VersionError("unsupported dataset schema '" + schema + "', expected '" +
                             kDatasetSchema + "'");
        }
        d.num_classes = j.at("num_classes").get<std::size_t>();
        d.feature_dim = j.at("feature_dim").get<std::size_t>();
        if (j.contains("num_graphs")) expected = j["num_graphs"].get<std::size_t>();
        have_header = true;
        continue;
      }
      LabeledGraph lg;
      lg.graph.n = j.at("n").get<std::size_t>();
      for (const auto& e : j.at("edges")) {
        if (!e.is_array() || e.size() != 2) throw ParseError(lineno, "edge must be a pair");
        lg.graph.add_edge(e[0].get<std::size_t>(), e[1].get<std::size_t>());
      }
      const auto& feats = j.at("features");
      Matrix f(lg.graph.n, d.feature_dim);
      if (feats.size() != lg.graph.n) throw ParseError(lineno, "feature row count differs from n");
      for (std::size_t r = 0; r < lg.graph.n; ++r) {
        if (feats[r].size() != d.feature_dim) throw ParseError(lineno, "feature width differs from header");
        for (std::size_t c = 0; c < d.feature_dim; ++c) f(r, c) = feats[r][c].get<double>();
      }
      lg.graph.features = std::move(f);
      lg.label = j.at("label").get<std::size_t>();
      if (j.contains("gt_mask")) {
        std::vector<std::uint8_t> gt;
        for (const auto& b : j["gt_mask"]) {
          const int v = b.get<int>();
          if (v != 0 && v != 1) throw ParseError(lineno, "gt_mask entries must be 0 or 1");
          gt.push_back(static_cast<std::uint8_t>(v));
        }
        lg.gt_mask = std::move(gt);
      }
      if (j.contains("edge_weights")) lg.graph.edge_weights = j["edge_weights"].get<std::vector<double>>();
      const std::size_t idx = d.graphs.size();
      if (j.contains("split")) {
        any_split = true;
        const std::string s = j["split"].get<std::string>();
        if (s == "train") train.push_back(idx);
        else if (s == "test") test.push_back(idx);
        else throw ParseError(lineno, "split must be \"train\" or \"test\"");
      }
      try {
        validate(lg.graph);
      } catch (const ContractError& ex) {
        throw ParseError(lineno, ex.what());
      }
      d.graphs.push_back(std::move(lg));
    } catch (const json::exception& ex) {
      throw ParseError(lineno, std::string("schema violation: ") + ex.what());
    }
  }
  if (!have_header) throw ParseError(lineno, "missing header line");
  if (expected && *expected != d.graphs.size()) {
    throw ParseError(lineno, "truncated dataset: header announces " + std::to_string(*expected) +
                                 " graphs, found " + std::to_string(d.graphs.size()));
  }
  if (any_split) {
    if (train.size() + test.size() != d.graphs.size()) {
      throw ParseError(lineno, "split tags present on some graphs but not all");
    }
    d.train = std::move(train);
    d.test = std::move(test);
  } else if (d.graphs.size() >= 2) {
    d = split_dataset(std::move(d), 0.8, 0);
  } else {
    for (std::size_t i = 0; i < d.graphs.size(); ++i) d.train.push_back(i);
  }
  try {
    validate(d);
  } catch (const ContractError& ex) {
    throw ParseError(0, ex.what());
  }
  return d;
}

inline void save_dataset(const Dataset& d, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_dataset(d));
}

inline Dataset load_dataset(const std::filesystem::path& path) { return parse_dataset(read_file(path)); }

}  // namespace gibconf
