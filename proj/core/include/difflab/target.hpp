#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "difflab/common.hpp"
#include "difflab/schedule.hpp"

namespace difflab {

/// Axis-aligned Gaussian component; `var` holds the covariance diagonal.
struct GaussianComponent {
  double weight = 1.0;
  Vec2 mean;
  Vec2 var{1.0, 1.0};
};

/// Mixture of axis-aligned Gaussians with exact density and score oracles.
class GmmTarget {
 public:
  /// Throws UsageError unless weights are in (0,1], sum to 1 within 1e-12,
  /// and every variance is strictly positive.
  explicit GmmTarget(std::vector<GaussianComponent> components);

  std::span<const GaussianComponent> components() const { return components_; }
  std::size_t size() const { return components_.size(); }

 private:
  std::vector<GaussianComponent> components_;
};

/// Two equal-weight components at (-4,-4) and (4,4) with covariances
/// diag(0.3, 0.1) and diag(0.2, 0.2).
GmmTarget default_target();

struct Dataset {
  std::vector<Vec2> points;
  std::uint64_t seed = 0;
};

/// n i.i.d. draws: component by weight, then a Gaussian draw.
Dataset sample(const GmmTarget& target, std::size_t n, std::uint64_t seed);

/// log sum_k w_k N(x; mu_k, Sigma_k), evaluated with a max shift.
double log_density(const GmmTarget& target, const Vec2& x);

/// Posterior component probabilities at x.
std::vector<double> responsibilities(const GmmTarget& target, const Vec2& x);

/// grad_x log p(x) = sum_k r_k(x) Sigma_k^{-1} (mu_k - x).
Vec2 score(const GmmTarget& target, const Vec2& x);

/// Law of x_t = sqrt(abar_t) x_0 + sqrt(1 - abar_t) eps for x_0 ~ target:
/// means scale by sqrt(abar_t), covariances become abar_t Sigma + (1 - abar_t) I.
GmmTarget diffused(const GmmTarget& target, const Schedule& schedule, int t);

/// Exact score of the diffused marginal at step t. Throws std::out_of_range
/// unless 0 <= t < T.
Vec2 diffused_score(const GmmTarget& target, const Schedule& schedule, int t, const Vec2& x);

/// Dataset CSV ("x,y") plus a JSON sidecar with seed, n and mixture parameters.
void write_dataset(const std::filesystem::path& csv_path, const std::filesystem::path& meta_path,
                   const Dataset& dataset, const GmmTarget& target);

}  // namespace difflab
