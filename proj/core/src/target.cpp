#include "difflab/target.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <json.hpp>

#include "difflab/io.hpp"
#include "difflab/rng.hpp"

namespace difflab {

GmmTarget::GmmTarget(std::vector<GaussianComponent> components) : components_(std::move(components)) {
  if (components_.empty()) throw UsageError("mixture needs at least one component");
  double total = 0.0;
  for (const auto& c : components_) {
    if (!(c.weight > 0.0 && c.weight <= 1.0)) throw UsageError("mixture weight outside (0, 1]");
    if (!(c.var.x > 0.0 && c.var.y > 0.0)) throw UsageError("mixture variance must be positive");
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) throw UsageError("mixture weights must sum to 1");
}

GmmTarget default_target() {
  return GmmTarget({
      {0.5, {-4.0, -4.0}, {0.3, 0.1}},
      {0.5, {4.0, 4.0}, {0.2, 0.2}},
  });
}

Dataset sample(const GmmTarget& target, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw UsageError("sample: n must be positive");
  Rng rng(seed);
  Dataset data;
  data.seed = seed;
  data.points.reserve(n);
  const auto comps = target.components();
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform();
    std::size_t k = 0;
    double cum = comps[0].weight;
    while (u > cum && k + 1 < comps.size()) cum += comps[++k].weight;
    const auto& c = comps[k];
    const Vec2 z = rng.normal2();
    data.points.push_back({c.mean.x + std::sqrt(c.var.x) * z.x, c.mean.y + std::sqrt(c.var.y) * z.y});
  }
  return data;
}

namespace {

double component_log_term(const GaussianComponent& c, const Vec2& x) {
  const double dx = x.x - c.mean.x;
  const double dy = x.y - c.mean.y;
  return std::log(c.weight) - std::log(2.0 * std::numbers::pi) - 0.5 * std::log(c.var.x * c.var.y) -
         0.5 * (dx * dx / c.var.x + dy * dy / c.var.y);
}

}  // namespace

double log_density(const GmmTarget& target, const Vec2& x) {
  const auto comps = target.components();
  std::vector<double> terms(comps.size());
  for (std::size_t k = 0; k < comps.size(); ++k) terms[k] = component_log_term(comps[k], x);
  const double m = *std::max_element(terms.begin(), terms.end());
  double s = 0.0;
  for (double l : terms) s += std::exp(l - m);
  return m + std::log(s);
}

std::vector<double> responsibilities(const GmmTarget& target, const Vec2& x) {
  const auto comps = target.components();
  std::vector<double> r(comps.size());
  for (std::size_t k = 0; k < comps.size(); ++k) r[k] = component_log_term(comps[k], x);
  const double m = *std::max_element(r.begin(), r.end());
  double s = 0.0;
  for (double& v : r) {
    v = std::exp(v - m);
    s += v;
  }
  for (double& v : r) v /= s;
  return r;
}

Vec2 score(const GmmTarget& target, const Vec2& x) {
  const auto comps = target.components();
  const auto r = responsibilities(target, x);
  Vec2 g;
  for (std::size_t k = 0; k < comps.size(); ++k) {
    g.x += r[k] * (comps[k].mean.x - x.x) / comps[k].var.x;
    g.y += r[k] * (comps[k].mean.y - x.y) / comps[k].var.y;
  }
  return g;
}

GmmTarget diffused(const GmmTarget& target, const Schedule& schedule, int t) {
  schedule.check_step(t);
  const double ab = schedule.alpha_bar(t);
  const double sa = std::sqrt(ab);
  std::vector<GaussianComponent> out;
  for (const auto& c : target.components()) {
    out.push_back({c.weight, sa * c.mean, {ab * c.var.x + (1.0 - ab), ab * c.var.y + (1.0 - ab)}});
  }
  return GmmTarget(std::move(out));
}

Vec2 diffused_score(const GmmTarget& target, const Schedule& schedule, int t, const Vec2& x) {
  return score(diffused(target, schedule, t), x);
}

void write_dataset(const std::filesystem::path& csv_path, const std::filesystem::path& meta_path,
                   const Dataset& dataset, const GmmTarget& target) {
  io::write_points_csv(csv_path, dataset.points);
  nlohmann::ordered_json meta;
  meta["n"] = dataset.points.size();
  meta["seed"] = dataset.seed;
  auto& comps = meta["components"] = nlohmann::ordered_json::array();
  for (const auto& c : target.components()) {
    comps.push_back({{"weight", c.weight},
                     {"mean", {c.mean.x, c.mean.y}},
                     {"cov_diag", {c.var.x, c.var.y}}});
  }
  io::write_file(meta_path, meta.dump(2) + "\n");
}

}  // namespace difflab
