#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>

#include <doctest.h>

#if DIFFLAB_HAVE_BOOST_MATH
#include <boost/math/distributions/normal.hpp>
#endif

#include "difflab/forward.hpp"
#include "difflab/io.hpp"
#include "difflab/normal.hpp"
#include "difflab/rng.hpp"
#include "difflab/target.hpp"
#include "support.hpp"

using namespace difflab;

namespace {

double reference_quantile(double u) {
#if DIFFLAB_HAVE_BOOST_MATH
  return boost::math::quantile(boost::math::normal_distribution<double>(), u);
#else
  // Bisection on erfc, slow but independent of the rational approximation.
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (0.5 * std::erfc(-mid / std::sqrt(2.0)) < u ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
#endif
}

double reference_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

void check_batch_invariant(const NoisedBatch& b, const Schedule& s) {
  for (std::size_t i = 0; i < b.size(); ++i) {
    const double ab = s.alpha_bar(b.t[i]);
    const Vec2 expect = std::sqrt(ab) * b.x0[i] + std::sqrt(1 - ab) * b.eps[i];
    REQUIRE(std::abs(b.xt[i].x - expect.x) <= 1e-12 * std::max(1.0, std::abs(expect.x)));
    REQUIRE(std::abs(b.xt[i].y - expect.y) <= 1e-12 * std::max(1.0, std::abs(expect.y)));
  }
}

}  // namespace

TEST_CASE("inverse normal cdf") {
  CHECK(inverse_normal_cdf(0.5) == 0.0);
  CHECK(std::abs(inverse_normal_cdf(0.975) - 1.959963984540054) < 1e-6);
  double worst = 0.0;
  double worst_round_trip = 0.0;
  for (double lg = -6.0; lg <= std::log10(0.5); lg += 0.05) {
    for (double u : {std::pow(10.0, lg), 1.0 - std::pow(10.0, lg)}) {
      worst = std::max(worst, std::abs(inverse_normal_cdf(u) - reference_quantile(u)));
      worst_round_trip = std::max(worst_round_trip, std::abs(normal_cdf(inverse_normal_cdf(u)) - u));
    }
  }
  CHECK(worst < 1e-9);
  CHECK(worst_round_trip < 1e-9);
  CHECK(inverse_normal_cdf(0.25) == -inverse_normal_cdf(0.75));
  CHECK_THROWS_AS(inverse_normal_cdf(0.0), UsageError);
  CHECK_THROWS_AS(inverse_normal_cdf(1.0), UsageError);
  CHECK_THROWS_AS(inverse_normal_cdf(-0.2), UsageError);
  CHECK_THROWS_AS(inverse_normal_cdf(std::nan("")), UsageError);
}

TEST_CASE("deterministic pseudo-noise") {
  // 0.05 * 10 is exactly 0.5 in binary floating point.
  CHECK(deterministic_eps({0.05, 0.05}, 0) == Vec2{0, 0});
  CHECK(deterministic_eps({0.05, -0.05}, 6) == Vec2{0, 0});

  const Vec2 e = deterministic_eps({3.14159, 3.14159}, 0);
  const double u = 3.14159 * 10.0 - std::floor(3.14159 * 10.0);
  CHECK(u == doctest::Approx(0.4159).epsilon(1e-12));
  CHECK(std::abs(e.x - reference_quantile(u)) < 1e-9);
  CHECK(e.x == e.y);

  // Exact integers land on the clamp.
  CHECK(std::abs(deterministic_eps({2.0, 3.0}, 4).x - reference_quantile(1e-6)) < 1e-9);

  const Vec2 a = deterministic_eps({1.2345678, -0.98765}, 17);
  const Vec2 b = deterministic_eps({1.2345678, -0.98765}, 17);
  CHECK(std::memcmp(&a, &b, sizeof a) == 0);
  // The digit window moves with t.
  CHECK(deterministic_eps({1.2345678, 0.5}, 0).x != deterministic_eps({1.2345678, 0.5}, 1).x);
}

TEST_CASE("deterministic noise looks standard normal at the final step") {
  const Dataset d = sample(default_target(), 10000, 0);
  const Schedule s = Schedule::cosine(100);
  for (int axis = 0; axis < 2; ++axis) {
    std::vector<double> v;
    for (const auto& p : d.points) {
      const Vec2 e = deterministic_eps(p, s.steps() - 1);
      v.push_back(axis == 0 ? e.x : e.y);
    }
    std::sort(v.begin(), v.end());
    double ks = 0.0;
    const double n = static_cast<double>(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double f = reference_cdf(v[i]);
      ks = std::max({ks, std::abs(f - i / n), std::abs((i + 1) / n - f)});
    }
    CAPTURE(axis);
    CHECK(ks < 0.03);
  }
}

TEST_CASE("no diffusion leaves points in place") {
  const Schedule none = Schedule::linear(3, 1e-300, 1e-300);
  const std::vector<Vec2> x0 = {{1.5, -2}, {0.3, 0.7}};
  const std::vector<int> t = {0, 2};
  Rng rng(1);
  const NoisedBatch g = diffuse_gaussian(x0, t, none, rng);
  CHECK(g.xt == x0);
  const NoisedBatch d = diffuse_deterministic(x0, t, none);
  CHECK(d.xt == x0);
}

TEST_CASE("batch invariant for both kinds") {
  const Schedule s = Schedule::cosine(100);
  const Dataset d = sample(default_target(), 500, 2);
  std::vector<int> t(d.points.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<int>(i % 100);
  Rng rng(4);
  check_batch_invariant(diffuse(ForwardKind::GaussianNoise, d.points, t, s, rng), s);
  check_batch_invariant(diffuse(ForwardKind::DeterministicDigits, d.points, t, s, rng), s);
  const NoisedBatch det = diffuse_deterministic(d.points, t, s);
  for (std::size_t i = 0; i < det.size(); ++i) CHECK(det.eps[i] == deterministic_eps(d.points[i], t[i]));

  const std::vector<int> bad = {100};
  const std::vector<Vec2> one = {{0, 0}};
  CHECK_THROWS_AS(diffuse_gaussian(one, bad, s, rng), std::out_of_range);
  CHECK_THROWS_AS(diffuse_deterministic(one, bad, s), std::out_of_range);
}

TEST_CASE("deterministic diffusion uses no generator") {
  const Schedule s = Schedule::cosine(10);
  const std::vector<Vec2> x0 = {{1, 2}, {3, 4}};
  const std::vector<int> t = {3, 7};
  Rng used(9);
  Rng fresh(9);
  diffuse(ForwardKind::DeterministicDigits, x0, t, s, used);
  CHECK(used.next_u64() == fresh.next_u64());
}

TEST_CASE("gaussian marginal covariance") {
  const Schedule s = Schedule::cosine(100);
  const int t = 30;
  const std::size_t n = 100000;
  const std::vector<Vec2> x0(n, Vec2{0, 0});
  const std::vector<int> ts(n, t);
  Rng rng(21);
  const NoisedBatch b = diffuse_gaussian(x0, ts, s, rng);
  double sxx = 0, syy = 0, sxy = 0;
  for (const auto& p : b.xt) {
    sxx += p.x * p.x;
    syy += p.y * p.y;
    sxy += p.x * p.y;
  }
  const double var = 1 - s.alpha_bar(t);
  const double se = var * std::sqrt(2.0 / n);
  CHECK(std::abs(sxx / n - var) < 3 * se);
  CHECK(std::abs(syy / n - var) < 3 * se);
  CHECK(std::abs(sxy / n) < 3 * var / std::sqrt(n));
}

TEST_CASE("chained single steps match the closed form") {
  const Schedule s = Schedule::cosine(100);
  const int T = 100;
  const std::size_t n = 10000;
  const Vec2 start{2.0, -1.0};
  auto eng = testing::fixture_engine(8);
  std::normal_distribution<double> z;
  std::vector<Vec2> chained(n);
  for (auto& p : chained) {
    p = start;
    for (int t = 0; t < T; ++t) {
      const double b = s.beta(t);
      p = std::sqrt(1 - b) * p + std::sqrt(b) * Vec2{z(eng), z(eng)};
    }
  }
  Rng rng(8);
  const std::vector<Vec2> x0(n, start);
  const std::vector<int> ts(n, T - 1);
  const NoisedBatch closed = diffuse_gaussian(x0, ts, s, rng);

  auto moments = [](const std::vector<Vec2>& v) {
    Vec2 m;
    for (const auto& p : v) m += p;
    m = (1.0 / v.size()) * m;
    Vec2 var;
    for (const auto& p : v) var += Vec2{(p.x - m.x) * (p.x - m.x), (p.y - m.y) * (p.y - m.y)};
    return std::pair{m, (1.0 / v.size()) * var};
  };
  const auto [m1, v1] = moments(chained);
  const auto [m2, v2] = moments(closed.xt);
  const double var = 1 - s.alpha_bar(T - 1);
  const double se_mean = std::sqrt(2 * var / n);
  const double se_var = var * std::sqrt(4.0 / n);
  CHECK(std::abs(m1.x - m2.x) < 3 * se_mean);
  CHECK(std::abs(m1.y - m2.y) < 3 * se_mean);
  CHECK(std::abs(v1.x - v2.x) < 3 * se_var);
  CHECK(std::abs(v1.y - v2.y) < 3 * se_var);
}

TEST_CASE("nearest mode and slice dump") {
  const GmmTarget g = default_target();
  CHECK(nearest_mode(g, {-3, -5}) == 0);
  CHECK(nearest_mode(g, {3, 5}) == 1);
  CHECK(nearest_mode(g, {0, 0}) == 0);

  const auto dir = testing::scratch_dir("forward");
  const Dataset d = sample(g, 40, 1);
  const std::vector<int> steps = {0, 27, 54, 81, 99};
  const Schedule s = Schedule::cosine(100);
  dump_forward_slices(dir / "slices.csv", d.points, g, s, ForwardKind::GaussianNoise, steps, 3);
  const auto table = io::read_csv(dir / "slices.csv");
  CHECK(table.rows.size() == 200);
  CHECK(table.header == std::vector<std::string>{"t", "x", "y", "cluster"});
  dump_forward_slices(dir / "again.csv", d.points, g, s, ForwardKind::GaussianNoise, steps, 3);
  CHECK(io::sha256_file(dir / "slices.csv") == io::sha256_file(dir / "again.csv"));
}

TEST_CASE("kind names") {
  CHECK(parse_forward_kind("gaussian") == ForwardKind::GaussianNoise);
  CHECK(parse_forward_kind("deterministic") == ForwardKind::DeterministicDigits);
  CHECK(to_string(ForwardKind::DeterministicDigits) == "deterministic");
  CHECK_THROWS_AS(parse_forward_kind("digits"), UsageError);
}
