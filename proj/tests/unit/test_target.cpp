#include <cmath>
#include <numbers>

#include <doctest.h>
#include <json.hpp>

#include "difflab/io.hpp"
#include "difflab/target.hpp"
#include "support.hpp"

using namespace difflab;

namespace {

double direct_density(const GmmTarget& g, const Vec2& x) {
  double p = 0.0;
  for (const auto& c : g.components()) {
    const double dx = x.x - c.mean.x;
    const double dy = x.y - c.mean.y;
    p += c.weight * std::exp(-0.5 * (dx * dx / c.var.x + dy * dy / c.var.y)) /
         (2.0 * std::numbers::pi * std::sqrt(c.var.x * c.var.y));
  }
  return p;
}

Vec2 fd_gradient(const auto& f, const Vec2& x, double h) {
  return {(f(Vec2{x.x + h, x.y}) - f(Vec2{x.x - h, x.y})) / (2 * h),
          (f(Vec2{x.x, x.y + h}) - f(Vec2{x.x, x.y - h})) / (2 * h)};
}

std::vector<Vec2> grid441() {
  std::vector<Vec2> pts;
  for (int i = 0; i < 21; ++i)
    for (int j = 0; j < 21; ++j) pts.push_back({-7.0 + 0.7 * i, -7.0 + 0.7 * j});
  return pts;
}

GmmTarget unit_gaussian(Vec2 mean = {}) { return GmmTarget({{1.0, mean, {1.0, 1.0}}}); }

}  // namespace

TEST_CASE("default mixture parameters") {
  const GmmTarget g = default_target();
  REQUIRE(g.size() == 2);
  const auto c = g.components();
  CHECK(c[0].weight == 0.5);
  CHECK(c[1].weight == 0.5);
  CHECK(c[0].mean == Vec2{-4, -4});
  CHECK(c[1].mean == Vec2{4, 4});
  CHECK(c[0].var == Vec2{0.3, 0.1});
  CHECK(c[1].var == Vec2{0.2, 0.2});
}

TEST_CASE("mixture validation") {
  CHECK_THROWS_AS(GmmTarget({{0.5, {}, {1, 1}}}), UsageError);
  CHECK_THROWS_AS(GmmTarget({{1.0, {}, {0, 1}}}), UsageError);
  CHECK_THROWS_AS(GmmTarget({{0.0, {}, {1, 1}}, {1.0, {}, {1, 1}}}), UsageError);
  CHECK_THROWS_AS(GmmTarget({}), UsageError);
}

TEST_CASE("sampling") {
  const Dataset a = sample(default_target(), 10000, 7);
  const Dataset b = sample(default_target(), 10000, 7);
  REQUIRE(a.points.size() == 10000);
  CHECK(a.points == b.points);
  CHECK(a.seed == 7);

  Vec2 sum[2];
  int n[2] = {0, 0};
  for (const auto& p : a.points) {
    const int k = p.x + p.y > 0 ? 1 : 0;
    sum[k] += p;
    ++n[k];
  }
  const Vec2 m0 = (1.0 / n[0]) * sum[0];
  const Vec2 m1 = (1.0 / n[1]) * sum[1];
  CHECK(std::abs(m0.x + 4) < 0.05);
  CHECK(std::abs(m0.y + 4) < 0.05);
  CHECK(std::abs(m1.x - 4) < 0.05);
  CHECK(std::abs(m1.y - 4) < 0.05);

  const Dataset one = sample(unit_gaussian(), 1, 3);
  REQUIRE(one.points.size() == 1);
  CHECK(is_finite(one.points[0]));
  CHECK_THROWS_AS(sample(default_target(), 0, 0), UsageError);
}

TEST_CASE("mixture moments by Monte Carlo") {
  const std::size_t n = 100000;
  const Dataset d = sample(default_target(), n, 11);
  double sx = 0, sy = 0;
  for (const auto& p : d.points) {
    sx += p.x;
    sy += p.y;
  }
  const double mx = sx / n, my = sy / n;
  double vxx = 0, vyy = 0, vxy = 0, m4x = 0, m4y = 0;
  for (const auto& p : d.points) {
    const double dx = p.x - mx, dy = p.y - my;
    vxx += dx * dx;
    vyy += dy * dy;
    vxy += dx * dy;
    m4x += dx * dx * dx * dx;
    m4y += dy * dy * dy * dy;
  }
  vxx /= n;
  vyy /= n;
  vxy /= n;
  m4x /= n;
  m4y /= n;
  // Mixture moments: mean 0, var = mean of (var_k + mu_k^2), cov = 16.
  const double true_vxx = 0.5 * (0.3 + 16) + 0.5 * (0.2 + 16);
  const double true_vyy = 0.5 * (0.1 + 16) + 0.5 * (0.2 + 16);
  CHECK(std::abs(mx) < 3 * std::sqrt(true_vxx / n));
  CHECK(std::abs(my) < 3 * std::sqrt(true_vyy / n));
  CHECK(std::abs(vxx - true_vxx) < 3 * std::sqrt((m4x - vxx * vxx) / n));
  CHECK(std::abs(vyy - true_vyy) < 3 * std::sqrt((m4y - vyy * vyy) / n));
  // var(dx dy) is close to vxx * vyy + vxy^2 for this nearly-rank-one pair; use the bound loosely
  CHECK(std::abs(vxy - 16.0) < 3 * std::sqrt((vxx * vyy + vxy * vxy) / n));
}

TEST_CASE("log density") {
  CHECK(log_density(unit_gaussian({1, 2}), {1, 2}) == doctest::Approx(-std::log(2 * std::numbers::pi)).epsilon(1e-14));
  const GmmTarget g = default_target();
  for (Vec2 x : {Vec2{-4, -4}, Vec2{4, 4}, Vec2{0, 0}, Vec2{-3.5, 4.2}}) {
    CAPTURE(x.x);
    CHECK(log_density(g, x) == doctest::Approx(std::log(direct_density(g, x))).epsilon(1e-12));
  }
  const double far = log_density(g, {100, 100});
  CHECK(std::isfinite(far));
  CHECK(far < -10000);
}

TEST_CASE("responsibilities sum to one") {
  const GmmTarget g = default_target();
  for (const auto& x : grid441()) {
    const auto r = responsibilities(g, x);
    CHECK(r[0] + r[1] == doctest::Approx(1.0).epsilon(1e-14));
  }
  const auto r = responsibilities(g, {1000, 1000});
  CHECK(r[1] == 1.0);
}

TEST_CASE("score against finite differences on the grid") {
  CHECK(score(unit_gaussian({2, -1}), {2, -1}) == Vec2{0, 0});
  const GmmTarget g = default_target();
  auto f = [&](const Vec2& x) { return log_density(g, x); };
  double worst = 0.0;
  for (const auto& x : grid441()) {
    const Vec2 s = score(g, x);
    const Vec2 fd = fd_gradient(f, x, 1e-5);
    worst = std::max({worst, std::abs(s.x - fd.x), std::abs(s.y - fd.y)});
  }
  CHECK(worst < 1e-5);
  for (Vec2 x : {Vec2{-4, -4}, Vec2{0, 0}}) {
    const Vec2 s = score(g, x);
    const Vec2 fd = fd_gradient(f, x, 1e-5);
    CHECK(std::abs(s.x - fd.x) < 1e-5);
    CHECK(std::abs(s.y - fd.y) < 1e-5);
  }
}

TEST_CASE("diffused score") {
  const GmmTarget g = default_target();
  // beta this small rounds alpha to exactly 1.
  const Schedule none = Schedule::linear(2, 1e-300, 1e-300);
  REQUIRE(none.alpha_bar(1) == 1.0);
  for (const auto& x : grid441()) CHECK(diffused_score(g, none, 1, x) == score(g, x));

  const Schedule cos = Schedule::cosine(100);
  const double ab = cos.alpha_bar(99);
  for (Vec2 x : {Vec2{1, 2}, Vec2{-3, 0.5}, Vec2{0, 0}}) {
    const Vec2 s = diffused_score(g, cos, 99, x);
    CHECK(std::abs(s.x + x.x) < 200 * ab);
    CHECK(std::abs(s.y + x.y) < 200 * ab);
  }

  double worst = 0.0;
  for (int t : {0, 10, 50, 90, 99}) {
    const GmmTarget q = diffused(g, cos, t);
    auto f = [&](const Vec2& x) { return log_density(q, x); };
    for (const auto& x : grid441()) {
      const Vec2 s = diffused_score(g, cos, t, x);
      const Vec2 fd = fd_gradient(f, x, 1e-5);
      worst = std::max({worst, std::abs(s.x - fd.x), std::abs(s.y - fd.y)});
    }
  }
  CHECK(worst < 1e-5);
  CHECK_THROWS_AS(diffused_score(g, cos, 100, {}), std::out_of_range);
}

TEST_CASE("diffused mixture parameters") {
  const Schedule cos = Schedule::cosine(100);
  const GmmTarget q = diffused(default_target(), cos, 40);
  const double ab = cos.alpha_bar(40);
  CHECK(q.components()[0].mean.x == doctest::Approx(-4 * std::sqrt(ab)));
  CHECK(q.components()[0].var.x == doctest::Approx(ab * 0.3 + 1 - ab));
  CHECK(q.components()[1].var.y == doctest::Approx(ab * 0.2 + 1 - ab));
}

TEST_CASE("conditional score equals scaled negative noise") {
  const Schedule cos = Schedule::cosine(100);
  auto eng = testing::fixture_engine(5);
  for (int t : {0, 1, 30, 99}) {
    const double ab = cos.alpha_bar(t);
    for (int k = 0; k < 50; ++k) {
      const Vec2 x0{testing::fixture_uniform(eng, -5, 5), testing::fixture_uniform(eng, -5, 5)};
      const Vec2 eps{testing::fixture_uniform(eng, -3, 3), testing::fixture_uniform(eng, -3, 3)};
      const Vec2 xt = std::sqrt(ab) * x0 + std::sqrt(1 - ab) * eps;
      const Vec2 closed = (-1.0 / (1 - ab)) * (xt - std::sqrt(ab) * x0);
      const Vec2 scaled = (-1.0 / std::sqrt(1 - ab)) * eps;
      CHECK(closed.x == doctest::Approx(scaled.x).epsilon(1e-9));
      CHECK(closed.y == doctest::Approx(scaled.y).epsilon(1e-9));
    }
  }
}

TEST_CASE("dataset files") {
  const auto dir = testing::scratch_dir("target");
  const Dataset d = sample(default_target(), 50, 3);
  write_dataset(dir / "data.csv", dir / "data.json", d, default_target());
  CHECK(io::read_points_csv(dir / "data.csv") == d.points);
  const auto meta = nlohmann::json::parse(io::read_file(dir / "data.json"));
  CHECK(meta["seed"] == 3);
  CHECK(meta["n"] == 50);
}
