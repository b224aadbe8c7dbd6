#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "difflab/forward.hpp"
#include "difflab/net.hpp"
#include "difflab/schedule.hpp"
#include "difflab/target.hpp"

namespace difflab {

/// What the network regresses on: the injected noise, the clean point, or
/// the posterior mean of the previous state.
enum class Objective { Noise, WholeStep, SingleStep };

std::string to_string(Objective objective);
/// Parses "noise" / "whole" / "single".
Objective parse_objective(const std::string& name);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step_count = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_hat = 1e-8;

  explicit AdamState(std::size_t n, double learning_rate = 1e-3) : m(n, 0.0), v(n, 0.0), lr(learning_rate) {}
};

/// Bias-corrected Adam update in place. Throws UsageError on size mismatch.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

/// Posterior mean of q(x_{t-1} | x_t, x_0):
/// (sqrt(abar_{t-1}) beta_t x0 + sqrt(alpha_t) (1 - abar_{t-1}) xt) / (1 - abar_t),
/// and x0 itself at t = 0.
Vec2 posterior_mean(const Vec2& x0, const Vec2& xt, int t, const Schedule& schedule);

/// Regression targets for a batch under `objective`.
std::vector<Vec2> make_target(Objective objective, const NoisedBatch& noised, const Schedule& schedule);

/// Network input (x, y, t/T).
inline double normalized_time(int t, int T) { return static_cast<double>(t) / T; }

struct TrainConfig {
  std::size_t batch_size = 64;
  int epochs = 50;
  int T = 100;
  ScheduleKind schedule = ScheduleKind::Cosine;
  ForwardKind forward = ForwardKind::GaussianNoise;
  Objective objective = Objective::Noise;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  /// Cosine offset s; ignored for the linear schedule.
  double cosine_offset = kDefaultCosineOffset;
  /// Explicit linear endpoints (beta_start, beta_end); absent means the
  /// default linear endpoints for T. Ignored for the cosine schedule.
  std::optional<std::pair<double, double>> linear_betas;

  /// Throws UsageError for non-positive sizes or learning rate.
  void validate() const;
  Schedule make_schedule() const;
};

struct TrainResult {
  Mlp mlp;
  std::vector<double> epoch_loss;  // mean minibatch loss per epoch
  std::uint64_t steps = 0;         // optimizer updates performed
};

/// epochs x ceil(N / batch) Adam steps over shuffled minibatches, with
/// t ~ Uniform{0..T-1} per item. Bitwise reproducible per seed.
TrainResult train_run(const TrainConfig& config, std::span<const Vec2> dataset);

/// Loss trace CSV "epoch,mean_loss".
std::string loss_trace_csv(std::span<const double> epoch_loss);

}  // namespace difflab
