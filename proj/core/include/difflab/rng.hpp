#pragma once

#include <cstdint>
#include <random>

#include "difflab/common.hpp"

namespace difflab {

// Seeded generator with platform-independent output.
//
// std::normal_distribution and friends are implementation-defined, so the
// distributions are derived here from the raw mt19937_64 stream; the same
// seed yields the same doubles on every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Independent stream for (seed, stream) via splitmix64 mixing.
  static Rng derive(std::uint64_t seed, std::uint64_t stream);

  /// Uniform in the open interval (0, 1).
  double uniform();
  /// Standard normal (Box-Muller; the second variate is cached).
  double normal();
  Vec2 normal2() { return {normal(), normal()}; }
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace difflab
