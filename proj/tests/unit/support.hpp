#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include <doctest.h>

#include "difflab/common.hpp"

namespace testing {

inline double rel_err(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / scale;
}

// Fresh per-test scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("difflab_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Independent generator for test fixtures, deliberately not difflab::Rng.
inline std::mt19937_64 fixture_engine(unsigned seed) { return std::mt19937_64(0x9e3779b97f4a7c15ULL ^ seed); }

inline double fixture_uniform(std::mt19937_64& eng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(eng);
}

}  // namespace testing
