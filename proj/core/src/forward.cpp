#include "difflab/forward.hpp"

#include <algorithm>
#include <cmath>

#include "difflab/io.hpp"
#include "difflab/normal.hpp"

namespace difflab {

std::string to_string(ForwardKind kind) {
  return kind == ForwardKind::GaussianNoise ? "gaussian" : "deterministic";
}

ForwardKind parse_forward_kind(const std::string& name) {
  if (name == "gaussian") return ForwardKind::GaussianNoise;
  if (name == "deterministic") return ForwardKind::DeterministicDigits;
  throw UsageError("unknown forward kind '" + name + "' (expected gaussian|deterministic)");
}

Vec2 noised_point(const Vec2& x0, const Vec2& eps, int t, const Schedule& schedule) {
  const double ab = schedule.alpha_bar(t);
  return std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * eps;
}

namespace {

template <typename EpsFn>
NoisedBatch build_batch(std::span<const Vec2> x0, std::span<const int> t, const Schedule& schedule,
                        EpsFn&& eps_for) {
  if (x0.size() != t.size()) throw UsageError("diffuse: x0 and t batch sizes differ");
  for (int step : t) schedule.check_step(step);
  NoisedBatch batch;
  batch.x0.assign(x0.begin(), x0.end());
  batch.t.assign(t.begin(), t.end());
  batch.xt.reserve(x0.size());
  batch.eps.reserve(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) {
    const Vec2 eps = eps_for(x0[i], t[i]);
    batch.eps.push_back(eps);
    batch.xt.push_back(noised_point(x0[i], eps, t[i], schedule));
  }
  return batch;
}

double digit_noise(double coord, int t) {
  constexpr double kClamp = 1e-6;
  const double scaled = std::abs(coord) * std::pow(10.0, 1 + t % 6);
  double u = scaled - std::floor(scaled);
  u = std::clamp(u, kClamp, 1.0 - kClamp);
  return inverse_normal_cdf(u);
}

}  // namespace

NoisedBatch diffuse_gaussian(std::span<const Vec2> x0, std::span<const int> t, const Schedule& schedule,
                             Rng& rng) {
  return build_batch(x0, t, schedule, [&rng](const Vec2&, int) { return rng.normal2(); });
}

Vec2 deterministic_eps(const Vec2& x0, int t) {
  if (t < 0) throw std::out_of_range("deterministic_eps: negative timestep");
  return {digit_noise(x0.x, t), digit_noise(x0.y, t)};
}

NoisedBatch diffuse_deterministic(std::span<const Vec2> x0, std::span<const int> t, const Schedule& schedule) {
  return build_batch(x0, t, schedule, [](const Vec2& p, int step) { return deterministic_eps(p, step); });
}

NoisedBatch diffuse(ForwardKind kind, std::span<const Vec2> x0, std::span<const int> t,
                    const Schedule& schedule, Rng& rng) {
  if (kind == ForwardKind::GaussianNoise) return diffuse_gaussian(x0, t, schedule, rng);
  return diffuse_deterministic(x0, t, schedule);
}

int nearest_mode(const GmmTarget& target, const Vec2& x) {
  const auto comps = target.components();
  int best = 0;
  double best_d = norm(x - comps[0].mean);
  for (std::size_t k = 1; k < comps.size(); ++k) {
    const double d = norm(x - comps[k].mean);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(k);
    }
  }
  return best;
}

void dump_forward_slices(const std::filesystem::path& path, std::span<const Vec2> x0, const GmmTarget& target,
                         const Schedule& schedule, ForwardKind kind, std::span<const int> steps,
                         std::uint64_t seed) {
  std::string out = "t,x,y,cluster\n";
  Rng rng(seed);
  for (int step : steps) {
    const std::vector<int> ts(x0.size(), step);
    const NoisedBatch batch = diffuse(kind, x0, ts, schedule, rng);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      out += std::to_string(step) + ',' + io::format_double(batch.xt[i].x) + ',' +
             io::format_double(batch.xt[i].y) + ',' + std::to_string(nearest_mode(target, x0[i])) + '\n';
    }
  }
  io::write_file(path, out);
}

}  // namespace difflab
