#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gibconf/errors.hpp"
#include "gibconf/io.hpp"
#include "gibconf/matrix.hpp"

namespace gibconf {

using NamedTensors = std::vector<std::pair<std::string, Matrix>>;

inline nlohmann::json tensor_to_json(const Matrix& m) {
  return {{"rows", m.rows()},
          {"cols", m.cols()},
          {"data", std::vector<double>(m.values().begin(), m.values().end())}};
}

inline Matrix tensor_from_json(const nlohmann::json& j) {
  return Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                j.at("data").get<std::vector<double>>());
}

/// {"schema": ..., "shape": {...}, "tensors": {name: {rows, cols, data}}}
inline std::string serialize_checkpoint(const std::string& schema, const nlohmann::json& shape,
                                        const NamedTensors& tensors) {
  nlohmann::json j;
  j["schema"] = schema;
  j["shape"] = shape;
  nlohmann::json t = nlohmann::json::object();
  for (const auto& [name, m] : tensors) t[name] = tensor_to_json(m);
  j["tensors"] = std::move(t);
  return j.dump(1) + "\n";
}

struct CheckpointContents {
  nlohmann::json shape;
  nlohmann::json tensors;
};

inline CheckpointContents parse_checkpoint(const std::string& text, const std::string& schema) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError(0, std::string("checkpoint is not valid JSON: ") + ex.what());
  }
  if (!j.is_object() || !j.contains("schema")) throw ParseError(0, "checkpoint lacks a schema tag");
  const auto tag = j["schema"].get<std::string>();
  if (tag != schema) {
    throw VersionError("checkpoint schema '" + tag + "' does not match expected '" + schema + "'");
  }
  if (!j.contains("shape") || !j.contains("tensors")) throw ParseError(0, "checkpoint is incomplete");
  return {j["shape"], j["tensors"]};
}

inline Matrix checkpoint_tensor(const CheckpointContents& c, const std::string& name,
                                std::size_t rows, std::size_t cols) {
  try {
    Matrix m = tensor_from_json(c.tensors.at(name));
    if (m.rows() != rows || m.cols() != cols) {
      throw ParseError(0, "tensor '" + name + "' has shape " + m.shape_string() + ", expected (" +
                              std::to_string(rows) + "x" + std::to_string(cols) + ")");
    }
    return m;
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError(0, "tensor '" + name + "': " + ex.what());
  } catch (const DimensionError& ex) {
    throw ParseError(0, "tensor '" + name + "': " + ex.what());
  }
}

}  // namespace gibconf
