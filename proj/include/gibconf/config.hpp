#pragma once

// key=value configuration files for training runs, and the JSON run manifest.

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include <json.hpp>

#include "gibconf/records.hpp"
#include "gibconf/trainer.hpp"

namespace gibconf {

namespace detail {
inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}
}  // namespace detail

/// Applies `key=value` lines to `cfg`. Blank lines and lines starting with '#' are ignored.
/// Keys: epochs, lr, alpha, size_coeff, entropy_coeff, lambda, beta, seed, bins, tau0, tauT.
inline TrainConfig parse_train_config(std::string_view text, TrainConfig cfg = {}) {
  std::size_t line_no = 0;
  for (auto raw : detail::csv_lines(text)) {
    ++line_no;
    auto line = detail::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, "expected key=value");
    const auto key = detail::trim(line.substr(0, eq));
    const auto value = detail::trim(line.substr(eq + 1));
    if (key == "epochs") cfg.epochs = parse_unsigned(value, line_no);
    else if (key == "lr") cfg.lr = parse_real(value, line_no);
    else if (key == "alpha") cfg.alpha = parse_real(value, line_no);
    else if (key == "size_coeff") cfg.size_coeff = parse_real(value, line_no);
    else if (key == "entropy_coeff") cfg.entropy_coeff = parse_real(value, line_no);
    else if (key == "lambda") cfg.lambda = parse_real(value, line_no);
    else if (key == "beta") cfg.beta = parse_real(value, line_no);
    else if (key == "seed") cfg.seed = parse_unsigned(value, line_no);
    else if (key == "bins") cfg.bins = parse_unsigned(value, line_no);
    else if (key == "tau0") cfg.tau0 = parse_real(value, line_no);
    else if (key == "tauT") cfg.tau_final = parse_real(value, line_no);
    else throw ParseError(line_no, "unknown key '" + std::string(key) + "'");
  }
  cfg.validate();
  return cfg;
}

inline TrainConfig load_train_config(const std::filesystem::path& path, TrainConfig cfg = {}) {
  return parse_train_config(read_file(path), cfg);
}

inline nlohmann::json to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs}, {"lr", c.lr},       {"alpha", c.alpha},
          {"size_coeff", c.size_coeff}, {"entropy_coeff", c.entropy_coeff},
          {"lambda", c.lambda}, {"beta", c.beta},   {"seed", c.seed},
          {"bins", c.bins},     {"tau0", c.tau0},   {"tauT", c.tau_final}};
}

inline constexpr const char* kManifestSchema = "gibconf-manifest/1";

struct Manifest {
  std::string command;
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json seeds = nlohmann::json::object();
  nlohmann::json inputs = nlohmann::json::object();
  nlohmann::json outputs = nlohmann::json::array();
  nlohmann::json extra = nlohmann::json::object();

  std::string dump() const {
    nlohmann::json j{{"schema", kManifestSchema}, {"command", command}, {"config", config},
                     {"seeds", seeds},           {"inputs", inputs},   {"outputs", outputs}};
    for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
    return j.dump(2) + "\n";
  }
};

}  // namespace gibconf
