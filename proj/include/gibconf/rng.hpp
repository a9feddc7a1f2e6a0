#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "gibconf/matrix.hpp"

namespace gibconf {

/// SplitMix64 finalizer, used to derive independent child seeds.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seedable, splittable generator. Passed explicitly wherever randomness is needed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(mix64(seed)) {}

  std::uint64_t seed() const noexcept { return seed_; }

  /// Child generator whose stream depends only on (seed, key), not on how much of
  /// this generator has been consumed.
  Rng split(std::uint64_t key) const { return Rng(mix64(seed_ ^ mix64(key + 0x632be59bd9b4e019ULL))); }
  Rng split(std::initializer_list<std::uint64_t> keys) const {
    Rng r = *this;
    for (auto k : keys) r = r.split(k);
    return r;
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform on the open interval (0, 1).
  double uniform_open() {
    return (static_cast<double>(engine_() >> 12) + 0.5) * 0x1.0p-52;
  }
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    std::uniform_int_distribution<std::size_t> dist(0, n - 1);
    return dist(engine_);
  }
  double normal() { return normal_(engine_); }

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// i.i.d. standard normal matrix, deterministic per seed.
inline Matrix gaussian_sample(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  Matrix out(rows, cols);
  for (double& v : out.values()) v = rng.normal();
  return out;
}

inline Matrix gaussian_sample(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix out(rows, cols);
  for (double& v : out.values()) v = rng.normal();
  return out;
}

}  // namespace gibconf
