#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "difflab/common.hpp"
#include "difflab/rng.hpp"
#include "difflab/schedule.hpp"
#include "difflab/target.hpp"

namespace difflab {

enum class ForwardKind { GaussianNoise, DeterministicDigits };

std::string to_string(ForwardKind kind);
/// Parses "gaussian" / "deterministic".
ForwardKind parse_forward_kind(const std::string& name);

/// Training tuples. Invariant: xt = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps.
struct NoisedBatch {
  std::vector<Vec2> x0;
  std::vector<int> t;
  std::vector<Vec2> xt;
  std::vector<Vec2> eps;

  std::size_t size() const { return x0.size(); }
};

/// Closed-form q(x_t | x_0) applied to a single point with a given perturbation.
Vec2 noised_point(const Vec2& x0, const Vec2& eps, int t, const Schedule& schedule);

/// Gaussian forward process: eps ~ N(0, I) drawn from `rng` in item order.
NoisedBatch diffuse_gaussian(std::span<const Vec2> x0, std::span<const int> t, const Schedule& schedule,
                             Rng& rng);

/// Digit-extraction pseudo-noise. Per coordinate:
/// u = frac(|x0_c| * 10^(1 + t mod 6)), clamped to [1e-6, 1 - 1e-6], then
/// mapped through the standard normal quantile.
Vec2 deterministic_eps(const Vec2& x0, int t);

/// As diffuse_gaussian, with eps = deterministic_eps(x0, t); no generator.
NoisedBatch diffuse_deterministic(std::span<const Vec2> x0, std::span<const int> t, const Schedule& schedule);

/// Dispatches on `kind`; `rng` is untouched for the deterministic kind.
NoisedBatch diffuse(ForwardKind kind, std::span<const Vec2> x0, std::span<const int> t,
                    const Schedule& schedule, Rng& rng);

/// Index of the nearest component mean; ties go to the lowest index.
int nearest_mode(const GmmTarget& target, const Vec2& x);

/// CSV "t,x,y,cluster" of the forward process at each requested step. The
/// cluster is the nearest-mean label of the clean point.
void dump_forward_slices(const std::filesystem::path& path, std::span<const Vec2> x0, const GmmTarget& target,
                         const Schedule& schedule, ForwardKind kind, std::span<const int> steps,
                         std::uint64_t seed);

}  // namespace difflab
