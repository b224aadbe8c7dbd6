#include "difflab/sample.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "difflab/io.hpp"
#include "difflab/rng.hpp"

namespace difflab {

std::string to_string(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::Noise:
      return "noise";
    case SamplerKind::WholeStep:
      return "whole";
    case SamplerKind::SingleStep:
      return "single";
  }
  return "noise";
}

SamplerKind parse_sampler_kind(const std::string& name) { return sampler_for(parse_objective(name)); }

SamplerKind sampler_for(Objective objective) {
  switch (objective) {
    case Objective::Noise:
      return SamplerKind::Noise;
    case Objective::WholeStep:
      return SamplerKind::WholeStep;
    case Objective::SingleStep:
      return SamplerKind::SingleStep;
  }
  return SamplerKind::Noise;
}

void check_compatible(SamplerKind kind, Objective objective) {
  if (sampler_for(objective) != kind) {
    throw MismatchError("sampler '" + to_string(kind) + "' cannot consume a network trained for objective '" +
                        to_string(objective) + "'");
  }
}

Predictor network_predictor(const Mlp& mlp, int T) {
  return [mlp, T](const Vec2& x, int t) { return predict(mlp, x, normalized_time(t, T)); };
}

Predictor oracle_noise_predictor(const GmmTarget& target, const Schedule& schedule) {
  return [target, schedule](const Vec2& x, int t) {
    return -std::sqrt(1.0 - schedule.alpha_bar(t)) * diffused_score(target, schedule, t, x);
  };
}

std::string to_string(InitMode mode) { return mode == InitMode::Grid ? "grid" : "gaussian"; }

InitMode parse_init_mode(const std::string& name) {
  if (name == "grid") return InitMode::Grid;
  if (name == "gaussian") return InitMode::Gaussian;
  throw UsageError("unknown init mode '" + name + "' (expected grid|gaussian)");
}

std::vector<Vec2> init_particles(InitMode mode, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw UsageError("init_particles: n must be positive");
  std::vector<Vec2> out;
  out.reserve(n);
  if (mode == InitMode::Gaussian) {
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) out.push_back(rng.normal2());
    return out;
  }
  const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
  if (side * side != n) throw UsageError("grid initialisation needs a perfect-square particle count");
  constexpr double kLo = -7.0;
  constexpr double kHi = 7.0;
  const double spacing = side == 1 ? 0.0 : (kHi - kLo) / static_cast<double>(side - 1);
  for (std::size_t i = 0; i < side; ++i) {
    for (std::size_t j = 0; j < side; ++j) {
      out.push_back({kLo + spacing * static_cast<double>(i), kLo + spacing * static_cast<double>(j)});
    }
  }
  return out;
}

namespace {

void check_reverse_step(int t, const Schedule& schedule) {
  if (t < 1 || t >= schedule.steps()) {
    throw std::out_of_range("reverse step " + std::to_string(t) + " outside [1, " +
                            std::to_string(schedule.steps() - 1) + "]");
  }
}

Vec2 noise_mean(const Predictor& eps_hat, const Vec2& xt, int t, const Schedule& schedule) {
  const double coef = schedule.beta(t) / std::sqrt(1.0 - schedule.alpha_bar(t));
  return (1.0 / std::sqrt(schedule.alpha(t))) * (xt - coef * eps_hat(xt, t));
}

Vec2 clamp(const Vec2& v, double c) { return {std::clamp(v.x, -c, c), std::clamp(v.y, -c, c)}; }

Vec2 clean_estimate(const Predictor& eps_hat, const Vec2& xt, int t, const Schedule& schedule, double clip) {
  const double ab = schedule.alpha_bar(t);
  return clamp((1.0 / std::sqrt(ab)) * (xt - std::sqrt(1.0 - ab) * eps_hat(xt, t)), clip);
}

Vec2 wholestep_mean(const Predictor& x0_hat, const Vec2& xt, int t, const Schedule& schedule,
                    const std::optional<double>& clip) {
  const Vec2 x0 = clip ? clamp(x0_hat(xt, t), *clip) : x0_hat(xt, t);
  return std::sqrt(schedule.alpha_bar_prev(t)) * x0;
}

void check_clip(const SamplerOptions& options) {
  if (options.clip && !(*options.clip > 0.0)) throw UsageError("clip bound must be positive");
}

}  // namespace

Vec2 step_noise(const Predictor& eps_hat, const Vec2& xt, int t, const Schedule& schedule, const Vec2& z) {
  check_reverse_step(t, schedule);
  return noise_mean(eps_hat, xt, t, schedule) + std::sqrt(schedule.beta(t)) * z;
}

Vec2 step_noise_clipped(const Predictor& eps_hat, const Vec2& xt, int t, const Schedule& schedule, const Vec2& z,
                        double clip) {
  check_reverse_step(t, schedule);
  const Vec2 x0 = clean_estimate(eps_hat, xt, t, schedule, clip);
  return posterior_mean(x0, xt, t, schedule) + std::sqrt(schedule.beta(t)) * z;
}

Vec2 step_wholestep(const Predictor& x0_hat, const Vec2& xt, int t, const Schedule& schedule, const Vec2& z) {
  check_reverse_step(t, schedule);
  return wholestep_mean(x0_hat, xt, t, schedule, std::nullopt) + std::sqrt(1.0 - schedule.alpha_bar_prev(t)) * z;
}

Vec2 step_singlestep(const Predictor& mean_hat, const Vec2& xt, int t, const Schedule& schedule, const Vec2& z) {
  check_reverse_step(t, schedule);
  return mean_hat(xt, t) + std::sqrt(schedule.beta(t)) * z;
}

Vec2 step(SamplerKind kind, const Predictor& predictor, const Vec2& xt, int t, const Schedule& schedule,
          const Vec2& z, const SamplerOptions& options) {
  check_clip(options);
  switch (kind) {
    case SamplerKind::Noise:
      if (options.clip) return step_noise_clipped(predictor, xt, t, schedule, z, *options.clip);
      return step_noise(predictor, xt, t, schedule, z);
    case SamplerKind::WholeStep:
      check_reverse_step(t, schedule);
      return wholestep_mean(predictor, xt, t, schedule, options.clip) +
             std::sqrt(1.0 - schedule.alpha_bar_prev(t)) * z;
    case SamplerKind::SingleStep:
      return step_singlestep(predictor, xt, t, schedule, z);
  }
  return xt;
}

Vec2 final_step(SamplerKind kind, const Predictor& predictor, const Vec2& x0, const Schedule& schedule,
                const SamplerOptions& options) {
  check_clip(options);
  switch (kind) {
    case SamplerKind::Noise:
      if (options.clip) return clean_estimate(predictor, x0, 0, schedule, *options.clip);
      return noise_mean(predictor, x0, 0, schedule);
    case SamplerKind::WholeStep:
      return wholestep_mean(predictor, x0, 0, schedule, options.clip);
    case SamplerKind::SingleStep:
      return predictor(x0, 0);
  }
  return x0;
}

Trajectory run_sampler(const Predictor& predictor, SamplerKind kind, const Schedule& schedule,
                       std::span<const Vec2> particles, std::span<const int> record_at, std::uint64_t seed,
                       const SamplerOptions& options) {
  check_clip(options);
  const int T = schedule.steps();
  std::set<int, std::greater<>> record(record_at.begin(), record_at.end());
  for (int t : record) schedule.check_step(t);
  record.insert(T - 1);
  record.insert(0);

  // Particle-major loop: each particle owns its generator stream, so the
  // result does not depend on evaluation order.
  std::vector<std::vector<Vec2>> columns(record.size(), std::vector<Vec2>(particles.size()));
  for (std::size_t i = 0; i < particles.size(); ++i) {
    Rng rng = Rng::derive(seed, i);
    Vec2 x = particles[i];
    auto slot = columns.begin();
    for (int t = T - 1; t >= 1; --t) {
      if (record.contains(t)) (*slot++)[i] = x;
      x = step(kind, predictor, x, t, schedule, rng.normal2(), options);
    }
    x = final_step(kind, predictor, x, schedule, options);
    if (!is_finite(x)) throw NumericError("sampler produced a non-finite particle");
    columns.back()[i] = x;
  }

  Trajectory traj;
  auto col = columns.begin();
  for (int t : record) traj.snapshots.push_back({t, std::move(*col++)});
  return traj;
}

std::string trajectory_csv(const Trajectory& trajectory) {
  std::string out = "snapshot_t,particle_id,x,y\n";
  for (const auto& snap : trajectory.snapshots) {
    for (std::size_t i = 0; i < snap.points.size(); ++i) {
      out += std::to_string(snap.t) + ',' + std::to_string(i) + ',' + io::format_double(snap.points[i].x) + ',' +
             io::format_double(snap.points[i].y) + '\n';
    }
  }
  return out;
}

void write_trajectory(const std::filesystem::path& path, const Trajectory& trajectory) {
  io::write_file(path, trajectory_csv(trajectory));
}

Trajectory read_trajectory(const std::filesystem::path& path) {
  const io::CsvTable table = io::read_csv(path);
  const std::size_t ct = table.column("snapshot_t");
  const std::size_t cx = table.column("x");
  const std::size_t cy = table.column("y");
  Trajectory traj;
  for (const auto& row : table.rows) {
    const int t = static_cast<int>(row[ct]);
    if (traj.snapshots.empty() || traj.snapshots.back().t != t) traj.snapshots.push_back({t, {}});
    traj.snapshots.back().points.push_back({row[cx], row[cy]});
  }
  if (traj.snapshots.empty()) throw UsageError("trajectory " + path.string() + " has no rows");
  return traj;
}

std::string snapshot_svg(const Snapshot& snapshot, const GmmTarget& target) {
  constexpr double kSize = 512.0;
  auto px = [](double v) { return (v + 7.0) / 14.0 * kSize; };
  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"512\" height=\"512\" viewBox=\"0 0 512 512\">\n";
  out += "<rect width=\"512\" height=\"512\" fill=\"white\"/>\n";
  static constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  for (const auto& p : snapshot.points) {
    if (std::abs(p.x) > 7.0 || std::abs(p.y) > 7.0) continue;
    const int k = nearest_mode(target, p);
    out += "<circle cx=\"" + io::format_double(px(p.x)) + "\" cy=\"" + io::format_double(kSize - px(p.y)) +
           "\" r=\"1\" fill=\"" + kColors[k % 4] + "\" fill-opacity=\"0.5\"/>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace difflab
