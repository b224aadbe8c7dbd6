#include <cmath>

#include <doctest.h>

#include "difflab/io.hpp"
#include "difflab/rng.hpp"
#include "difflab/sample.hpp"
#include "support.hpp"

using namespace difflab;

namespace {

const Predictor kZero = [](const Vec2&, int) { return Vec2{}; };

// The exact noise given a known clean point.
Predictor true_noise(const Vec2& x0, const Schedule& s) {
  return [x0, &s](const Vec2& x, int t) {
    const double ab = s.alpha_bar(t);
    return (1.0 / std::sqrt(1 - ab)) * (x - std::sqrt(ab) * x0);
  };
}

double sample_variance(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m += x;
  m /= v.size();
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return s / v.size();
}

}  // namespace

TEST_CASE("grid initialisation") {
  const auto four = init_particles(InitMode::Grid, 4, 0);
  CHECK(four == std::vector<Vec2>{{-7, -7}, {-7, 7}, {7, -7}, {7, 7}});
  const auto big = init_particles(InitMode::Grid, 10000, 0);
  REQUIRE(big.size() == 10000);
  CHECK(big[1].y - big[0].y == doctest::Approx(14.0 / 99.0).epsilon(1e-14));
  CHECK(big[100].x - big[0].x == doctest::Approx(14.0 / 99.0).epsilon(1e-14));
  CHECK(big.back() == Vec2{7, 7});
  CHECK_THROWS_AS(init_particles(InitMode::Grid, 10, 0), UsageError);
  CHECK_THROWS_AS(init_particles(InitMode::Gaussian, 0, 0), UsageError);
}

TEST_CASE("gaussian initialisation") {
  const std::size_t n = 100000;
  const auto p = init_particles(InitMode::Gaussian, n, 4);
  double sxx = 0, syy = 0, sxy = 0;
  for (const auto& v : p) {
    sxx += v.x * v.x;
    syy += v.y * v.y;
    sxy += v.x * v.y;
  }
  const double se = std::sqrt(2.0 / n);
  CHECK(std::abs(sxx / n - 1) < 3 * se);
  CHECK(std::abs(syy / n - 1) < 3 * se);
  CHECK(std::abs(sxy / n) < 3 / std::sqrt(n));
  CHECK(init_particles(InitMode::Gaussian, 10, 4) == init_particles(InitMode::Gaussian, 10, 4));
}

TEST_CASE("noise step") {
  const Schedule tiny = Schedule::linear(10, 1e-15, 1e-15);
  const Vec2 x{1.25, -3.5};
  const Vec2 out = step_noise(kZero, x, 5, tiny, {0.7, -1.2});
  CHECK(norm(out - x) < 1e-6);

  const Schedule s = Schedule::cosine(100);
  const Vec2 x0{-3.9, -4.2};
  const Vec2 eps{0.4, -1.1};
  const Vec2 x1 = std::sqrt(s.alpha_bar(1)) * x0 + std::sqrt(1 - s.alpha_bar(1)) * eps;
  const Predictor oracle = true_noise(x0, s);
  CHECK(oracle(x1, 1).x == doctest::Approx(eps.x).epsilon(1e-12));
  const Vec2 xa = step_noise(oracle, x1, 1, s, {0, 0});
  const Vec2 back = final_step(SamplerKind::Noise, oracle, xa, s);
  CHECK(std::abs(back.x - x0.x) < 1e-10);
  CHECK(std::abs(back.y - x0.y) < 1e-10);

  CHECK_THROWS_AS(step_noise(kZero, x, 0, s, {}), std::out_of_range);
  CHECK_THROWS_AS(step_noise(kZero, x, 100, s, {}), std::out_of_range);
}

TEST_CASE("stochastic term variance is beta") {
  const Schedule s = Schedule::cosine(100);
  const int t = 40;
  const std::size_t n = 100000;
  Rng rng(3);
  std::vector<double> noise_x, single_x;
  const Vec2 x{0.5, 0.5};
  const Predictor ident = [](const Vec2& v, int) { return v; };
  const Vec2 noise_mean = step_noise(kZero, x, t, s, {});
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 z = rng.normal2();
    noise_x.push_back(step_noise(kZero, x, t, s, z).x - noise_mean.x);
    single_x.push_back(step_singlestep(ident, x, t, s, z).x);
  }
  const double se = s.beta(t) * std::sqrt(2.0 / n);
  CHECK(std::abs(sample_variance(noise_x) - s.beta(t)) < 3 * se);
  CHECK(std::abs(sample_variance(single_x) - s.beta(t)) < 3 * se);
}

TEST_CASE("whole step") {
  const Schedule s = Schedule::cosine(100);
  const Vec2 c{2.0, -1.0};
  const Predictor constant = [c](const Vec2&, int) { return c; };
  const Vec2 z0 = step_wholestep(constant, {5, 5}, 30, s, {0, 0});
  CHECK(z0 == std::sqrt(s.alpha_bar(29)) * c);

  const double coef = std::sqrt(1 - s.alpha_bar(0));
  CHECK(coef < 0.05);
  const Vec2 z{0.3, -0.4};
  const Vec2 at1 = step_wholestep(constant, {0, 0}, 1, s, z);
  CHECK(norm(at1 - c) < coef * norm(z) + (1 - std::sqrt(s.alpha_bar(0))) * norm(c) + 1e-15);

  const int t = 50;
  const std::size_t n = 100000;
  Rng rng(5);
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 v = step_wholestep(constant, {0, 0}, t, s, rng.normal2());
    xs.push_back(v.x);
    ys.push_back(v.y);
  }
  double mx = 0;
  for (double v : xs) mx += v;
  mx /= n;
  const double var = 1 - s.alpha_bar(t - 1);
  CHECK(std::abs(mx - std::sqrt(s.alpha_bar(t - 1)) * c.x) < 3 * std::sqrt(var / n));
  CHECK(std::abs(sample_variance(xs) - var) < 3 * var * std::sqrt(2.0 / n));
  CHECK(std::abs(sample_variance(ys) - var) < 3 * var * std::sqrt(2.0 / n));
}

TEST_CASE("single step") {
  const Schedule s = Schedule::cosine(100);
  const Predictor pred = [](const Vec2& v, int t) { return Vec2{v.x * 0.5, v.y + t}; };
  CHECK(step_singlestep(pred, {2, 3}, 7, s, {0, 0}) == Vec2{1, 10});
  const Predictor ident = [](const Vec2& v, int) { return v; };
  const Vec2 z{0.25, -2};
  CHECK(step_singlestep(ident, {1, 1}, 20, s, z) == Vec2{1, 1} + std::sqrt(s.beta(20)) * z);
  CHECK(final_step(SamplerKind::SingleStep, pred, {2, 3}, s) == Vec2{1, 3});
}

TEST_CASE("parametrisations agree given a shared oracle") {
  const Schedule s = Schedule::cosine(100);
  auto eng = testing::fixture_engine(17);
  double worst = 0.0;
  for (int k = 0; k < 500; ++k) {
    const int t = 1 + k % 99;
    const Vec2 x0{testing::fixture_uniform(eng, -6, 6), testing::fixture_uniform(eng, -6, 6)};
    const Vec2 eps{testing::fixture_uniform(eng, -3, 3), testing::fixture_uniform(eng, -3, 3)};
    const Vec2 xt = std::sqrt(s.alpha_bar(t)) * x0 + std::sqrt(1 - s.alpha_bar(t)) * eps;
    const Vec2 via_eps = step_noise([eps](const Vec2&, int) { return eps; }, xt, t, s, {});
    const Vec2 via_mu =
        step_singlestep([&](const Vec2& x, int tt) { return posterior_mean(x0, x, tt, s); }, xt, t, s, {});
    worst = std::max({worst, std::abs(via_eps.x - via_mu.x), std::abs(via_eps.y - via_mu.y)});
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("clean-point clamp") {
  const Schedule s = Schedule::cosine(100);
  const Predictor oracle = oracle_noise_predictor(default_target(), s);
  auto eng = testing::fixture_engine(23);
  for (int k = 0; k < 200; ++k) {
    const int t = 1 + k % 99;
    const Vec2 x{testing::fixture_uniform(eng, -3, 3), testing::fixture_uniform(eng, -3, 3)};
    const Vec2 z{testing::fixture_uniform(eng, -2, 2), testing::fixture_uniform(eng, -2, 2)};
    // A bound nothing reaches reproduces the plain step.
    const Vec2 loose = step_noise_clipped(oracle, x, t, s, z, 1e9);
    const Vec2 plain = step_noise(oracle, x, t, s, z);
    CHECK(std::abs(loose.x - plain.x) < 1e-9);
    CHECK(std::abs(loose.y - plain.y) < 1e-9);
  }
  const Predictor wild = [](const Vec2&, int) { return Vec2{50, -50}; };
  const SamplerOptions clip{7.0};
  const Vec2 f = final_step(SamplerKind::Noise, wild, {0, 0}, s, clip);
  CHECK(std::abs(f.x) <= 7.0);
  CHECK(std::abs(f.y) <= 7.0);
  const Vec2 w = final_step(SamplerKind::WholeStep, wild, {0, 0}, s, clip);
  CHECK(w == Vec2{7, -7});
  CHECK(step(SamplerKind::WholeStep, wild, {0, 0}, 10, s, {0, 0}, clip) == std::sqrt(s.alpha_bar(9)) * Vec2{7, -7});
  CHECK_THROWS_AS(step(SamplerKind::Noise, wild, {0, 0}, 10, s, {0, 0}, SamplerOptions{0.0}), UsageError);
}

TEST_CASE("run sampler") {
  const Schedule s = Schedule::cosine(100);
  const auto particles = init_particles(InitMode::Grid, 16, 0);
  const std::vector<int> record = {99, 54, 36, 18, 0};
  const Predictor oracle = oracle_noise_predictor(default_target(), s);
  const Trajectory a = run_sampler(oracle, SamplerKind::Noise, s, particles, record, 9);
  REQUIRE(a.snapshots.size() == 5);
  CHECK(a.first().t == 99);
  CHECK(a.last().t == 0);
  for (std::size_t i = 1; i < a.snapshots.size(); ++i) CHECK(a.snapshots[i].t < a.snapshots[i - 1].t);
  CHECK(a.first().points == particles);
  for (const auto& p : a.last().points) CHECK(is_finite(p));

  const Trajectory b = run_sampler(oracle, SamplerKind::Noise, s, particles, record, 9);
  CHECK(trajectory_csv(a) == trajectory_csv(b));
  const Trajectory c = run_sampler(oracle, SamplerKind::Noise, s, particles, record, 10);
  CHECK(trajectory_csv(a) != trajectory_csv(c));

  const Trajectory only_ends = run_sampler(oracle, SamplerKind::Noise, s, particles, {}, 9);
  CHECK(only_ends.snapshots.size() == 2);
  CHECK(only_ends.last().points == a.last().points);
  const std::vector<int> bad = {100};
  CHECK_THROWS_AS(run_sampler(oracle, SamplerKind::Noise, s, particles, bad, 9), std::out_of_range);
}

TEST_CASE("zero network with vanishing betas freezes particles") {
  const Schedule tiny = Schedule::linear(100, 1e-15, 1e-15);
  const auto particles = init_particles(InitMode::Grid, 9, 0);
  const Trajectory tr = run_sampler(kZero, SamplerKind::Noise, tiny, particles, {}, 1);
  for (std::size_t i = 0; i < particles.size(); ++i) CHECK(norm(tr.last().points[i] - particles[i]) < 1e-5);
}

TEST_CASE("samplers keep finite inputs finite") {
  const Schedule s = Schedule::cosine(100);
  const Predictor oracle = oracle_noise_predictor(default_target(), s);
  for (int t = 1; t < 100; ++t) {
    for (Vec2 x : {Vec2{-7, 7}, Vec2{0, 0}, Vec2{30, -30}}) {
      for (SamplerKind k : {SamplerKind::Noise, SamplerKind::WholeStep, SamplerKind::SingleStep}) {
        REQUIRE(is_finite(step(k, oracle, x, t, s, {1, -1})));
      }
    }
  }
}

TEST_CASE("sampler and objective pairing") {
  CHECK_NOTHROW(check_compatible(SamplerKind::Noise, Objective::Noise));
  CHECK_THROWS_AS(check_compatible(SamplerKind::WholeStep, Objective::Noise), MismatchError);
  CHECK_THROWS_AS(check_compatible(SamplerKind::Noise, Objective::SingleStep), MismatchError);
  CHECK(parse_sampler_kind("whole") == SamplerKind::WholeStep);
  CHECK(to_string(SamplerKind::SingleStep) == "single");
  CHECK(parse_init_mode("grid") == InitMode::Grid);
  CHECK_THROWS_AS(parse_init_mode("lattice"), UsageError);
}

TEST_CASE("trajectory files") {
  const auto dir = testing::scratch_dir("sample");
  const Schedule s = Schedule::cosine(20);
  const std::vector<int> record = {10, 5};
  const Trajectory tr =
      run_sampler(oracle_noise_predictor(default_target(), s), SamplerKind::Noise, s,
                  init_particles(InitMode::Gaussian, 7, 2), record, 3);
  write_trajectory(dir / "traj.csv", tr);
  const Trajectory back = read_trajectory(dir / "traj.csv");
  REQUIRE(back.snapshots.size() == tr.snapshots.size());
  for (std::size_t i = 0; i < tr.snapshots.size(); ++i) {
    CHECK(back.snapshots[i].t == tr.snapshots[i].t);
    CHECK(back.snapshots[i].points == tr.snapshots[i].points);
  }
  const std::string svg = snapshot_svg(tr.last(), default_target());
  CHECK(svg.find("<svg") == 0);
  CHECK(svg.find("<circle") != std::string::npos);
}
