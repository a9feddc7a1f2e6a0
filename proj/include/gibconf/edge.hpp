#pragma once

#include <cstddef>

namespace gibconf {

/// Undirected edge stored once with u < v.
struct Edge {
  std::size_t u = 0;
  std::size_t v = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

}  // namespace gibconf
