#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "difflab/common.hpp"
#include "difflab/net.hpp"
#include "difflab/schedule.hpp"
#include "difflab/target.hpp"
#include "difflab/train.hpp"

namespace difflab {

/// Reverse procedure; each kind consumes the output of the matching Objective.
enum class SamplerKind { Noise, WholeStep, SingleStep };

std::string to_string(SamplerKind kind);
SamplerKind parse_sampler_kind(const std::string& name);
SamplerKind sampler_for(Objective objective);
/// Throws MismatchError unless `kind` is the sampler for `objective`.
void check_compatible(SamplerKind kind, Objective objective);

/// Anything that maps (x_t, t) to a 2-vector: a trained network or an
/// analytic oracle. The factories below copy their arguments.
using Predictor = std::function<Vec2(const Vec2& x, int t)>;

/// The network evaluated at (x, t/T).
Predictor network_predictor(const Mlp& mlp, int T);

/// eps-hat = -sqrt(1 - abar_t) * diffused_score, the exact noise predictor.
Predictor oracle_noise_predictor(const GmmTarget& target, const Schedule& schedule);

enum class InitMode { Grid, Gaussian };
std::string to_string(InitMode mode);
InitMode parse_init_mode(const std::string& name);

/// Grid: sqrt(n) x sqrt(n) lattice over [-7, 7]^2 (throws UsageError unless n
/// is a perfect square). Gaussian: standard normal draws.
std::vector<Vec2> init_particles(InitMode mode, std::size_t n, std::uint64_t seed);

// Single reverse steps for 1 <= t <= T-1, with the injected noise z passed
// explicitly. Out-of-range t throws std::out_of_range.

/// (1/sqrt(alpha_t)) (x_t - beta_t / sqrt(1 - abar_t) eps_hat) + sqrt(beta_t) z
Vec2 step_noise(const Predictor& eps_hat, const Vec2& xt, int t, const Schedule& schedule, const Vec2& z);
/// sqrt(abar_{t-1}) x0_hat + sqrt(1 - abar_{t-1}) z, re-noising with fresh z.
Vec2 step_wholestep(const Predictor& x0_hat, const Vec2& xt, int t, const Schedule& schedule, const Vec2& z);
/// mu_hat + sqrt(beta_t) z
Vec2 step_singlestep(const Predictor& mean_hat, const Vec2& xt, int t, const Schedule& schedule, const Vec2& z);

/// Optional clamp of the clean-point estimate to [-c, c] per coordinate.
/// Noise: x0_hat = (x_t - sqrt(1 - abar_t) eps_hat) / sqrt(abar_t) is clamped
/// and the step uses posterior_mean(x0_hat, x_t, t) + sqrt(beta_t) z, which
/// equals step_noise when nothing is clamped. Whole-step: x0_hat is clamped.
/// Single-step has no clean-point estimate and ignores the clamp.
struct SamplerOptions {
  std::optional<double> clip;
};

Vec2 step_noise_clipped(const Predictor& eps_hat, const Vec2& xt, int t, const Schedule& schedule, const Vec2& z,
                        double clip);

Vec2 step(SamplerKind kind, const Predictor& predictor, const Vec2& xt, int t, const Schedule& schedule,
          const Vec2& z, const SamplerOptions& options = {});

/// Noiseless t = 0 step producing the clean sample: each kind's step with z = 0
/// (abar_{-1} = 1, so every kind returns its clean-point estimate).
Vec2 final_step(SamplerKind kind, const Predictor& predictor, const Vec2& x0, const Schedule& schedule,
                const SamplerOptions& options = {});

struct Snapshot {
  int t = 0;
  std::vector<Vec2> points;
};

/// Snapshots in strictly decreasing t; first T-1 (the initial particles),
/// last 0 (the sampler output). Snapshot t > 0 holds the state entering step t.
struct Trajectory {
  std::vector<Snapshot> snapshots;

  const Snapshot& first() const { return snapshots.front(); }
  const Snapshot& last() const { return snapshots.back(); }
};

/// Ancestral sampling: steps t = T-1 .. 1 with z ~ N(0, I), then final_step.
/// Particle i draws from the stream Rng::derive(seed, i). `record_at` may list
/// any steps in [0, T); T-1 and 0 are always recorded.
Trajectory run_sampler(const Predictor& predictor, SamplerKind kind, const Schedule& schedule,
                       std::span<const Vec2> particles, std::span<const int> record_at, std::uint64_t seed,
                       const SamplerOptions& options = {});

/// CSV "snapshot_t,particle_id,x,y".
std::string trajectory_csv(const Trajectory& trajectory);
void write_trajectory(const std::filesystem::path& path, const Trajectory& trajectory);
Trajectory read_trajectory(const std::filesystem::path& path);

/// Scatter plot of one snapshot over [-7, 7]^2, for visual inspection only.
std::string snapshot_svg(const Snapshot& snapshot, const GmmTarget& target);

}  // namespace difflab
