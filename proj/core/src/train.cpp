#include "difflab/train.hpp"

#include <cmath>
#include <numeric>

#include "difflab/io.hpp"
#include "difflab/rng.hpp"

namespace difflab {

std::string to_string(Objective objective) {
  switch (objective) {
    case Objective::Noise:
      return "noise";
    case Objective::WholeStep:
      return "whole";
    case Objective::SingleStep:
      return "single";
  }
  return "noise";
}

Objective parse_objective(const std::string& name) {
  if (name == "noise") return Objective::Noise;
  if (name == "whole") return Objective::WholeStep;
  if (name == "single") return Objective::SingleStep;
  throw UsageError("unknown objective '" + name + "' (expected noise|whole|single)");
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size() || params.size() != state.v.size()) {
    throw UsageError("adam_step: parameter, gradient and state sizes differ");
  }
  ++state.step_count;
  const double k = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(state.beta1, k);
  const double c2 = 1.0 - std::pow(state.beta2, k);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps_hat);
  }
}

Vec2 posterior_mean(const Vec2& x0, const Vec2& xt, int t, const Schedule& schedule) {
  if (t == 0) return x0;
  const double ab = schedule.alpha_bar(t);
  const double ab_prev = schedule.alpha_bar_prev(t);
  const double c0 = std::sqrt(ab_prev) * schedule.beta(t) / (1.0 - ab);
  const double ct = std::sqrt(schedule.alpha(t)) * (1.0 - ab_prev) / (1.0 - ab);
  return c0 * x0 + ct * xt;
}

std::vector<Vec2> make_target(Objective objective, const NoisedBatch& noised, const Schedule& schedule) {
  switch (objective) {
    case Objective::Noise:
      return noised.eps;
    case Objective::WholeStep:
      return noised.x0;
    case Objective::SingleStep: {
      std::vector<Vec2> out;
      out.reserve(noised.size());
      for (std::size_t i = 0; i < noised.size(); ++i) {
        out.push_back(posterior_mean(noised.x0[i], noised.xt[i], noised.t[i], schedule));
      }
      return out;
    }
  }
  return noised.eps;
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw UsageError("batch size must be positive");
  if (epochs <= 0) throw UsageError("epochs must be positive");
  if (T <= 0) throw UsageError("T must be positive");
  if (!(learning_rate > 0.0)) throw UsageError("learning rate must be positive");
}

Schedule TrainConfig::make_schedule() const {
  if (schedule == ScheduleKind::Cosine) return Schedule::cosine(T, cosine_offset);
  if (linear_betas) return Schedule::linear(T, linear_betas->first, linear_betas->second);
  return Schedule::linear_default(T);
}

TrainResult train_run(const TrainConfig& config, std::span<const Vec2> dataset) {
  config.validate();
  if (dataset.empty()) throw UsageError("train_run: dataset is empty");
  const Schedule schedule = config.make_schedule();

  TrainResult result{Mlp::init(Rng::derive(config.seed, 0).next_u64()), {}, 0};
  Mlp& mlp = result.mlp;
  AdamState adam(mlp.params().size(), config.learning_rate);
  Rng rng = Rng::derive(config.seed, 1);

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<Vec2> x0;
  std::vector<int> ts;
  std::vector<double> inputs;
  std::vector<double> targets;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    double epoch_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      x0.clear();
      ts.clear();
      for (std::size_t i = start; i < end; ++i) {
        x0.push_back(dataset[order[i]]);
        ts.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(config.T))));
      }
      const NoisedBatch batch = diffuse(config.forward, x0, ts, schedule, rng);
      const std::vector<Vec2> goal = make_target(config.objective, batch, schedule);

      inputs.clear();
      targets.clear();
      for (std::size_t i = 0; i < batch.size(); ++i) {
        inputs.insert(inputs.end(), {batch.xt[i].x, batch.xt[i].y, normalized_time(batch.t[i], config.T)});
        targets.insert(targets.end(), {goal[i].x, goal[i].y});
      }
      const LossAndGradients lg = mse_backward(mlp, inputs, targets);
      adam_step(mlp.params(), lg.grads.values, adam);
      if (!std::isfinite(lg.loss) || !mlp.finite()) throw NumericError("training diverged (non-finite loss)");
      epoch_sum += lg.loss;
      ++batches;
      ++result.steps;
    }
    result.epoch_loss.push_back(epoch_sum / static_cast<double>(batches));
  }
  return result;
}

std::string loss_trace_csv(std::span<const double> epoch_loss) {
  std::string out = "epoch,mean_loss\n";
  for (std::size_t e = 0; e < epoch_loss.size(); ++e) {
    out += std::to_string(e) + ',' + io::format_double(epoch_loss[e]) + '\n';
  }
  return out;
}

}  // namespace difflab
