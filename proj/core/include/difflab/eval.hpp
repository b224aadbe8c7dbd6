#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "difflab/common.hpp"
#include "difflab/sample.hpp"
#include "difflab/schedule.hpp"
#include "difflab/target.hpp"
#include "difflab/train.hpp"

namespace difflab {

/// 2 E|a - b| - E|a - a'| - E|b - b'| over all ordered pairs (V-statistic,
/// exact pairwise sums). Symmetric bit-for-bit in its arguments.
/// Throws UsageError if either set is empty.
double energy_distance(std::span<const Vec2> a, std::span<const Vec2> b);

struct ModeStats {
  std::vector<int> labels;
  std::vector<double> fractions;     // per mode, sums to 1
  std::vector<Vec2> per_mode_std;    // per mode, per coordinate; 0 for empty modes
};

/// Nearest-true-mean assignment (ties to the lowest mode index) with
/// population standard deviations per mode.
ModeStats assign_modes(std::span<const Vec2> samples, const GmmTarget& target);

double mean_log_likelihood(std::span<const Vec2> samples, const GmmTarget& target);

/// Fraction of particles whose nearest-mean label in the first snapshot
/// equals the label in the last: 1 means fully positionally determined,
/// 0.5 means no bias for a balanced two-mode target.
double positional_bias(const Trajectory& trajectory, const GmmTarget& target);

struct MetricsReport {
  double energy_distance = 0.0;
  double mean_log_likelihood = 0.0;
  std::vector<double> mode_fractions;
  std::vector<Vec2> per_mode_std;
  std::optional<double> positional_bias;
};

MetricsReport evaluate(std::span<const Vec2> samples, std::span<const Vec2> reference, const GmmTarget& target,
                       const Trajectory* trajectory = nullptr);
std::string metrics_json(const MetricsReport& report);

/// Square evaluation lattice; bounds must lie within [-7, 7].
struct GridSpec {
  std::size_t n = 21;
  double lo = -7.0;
  double hi = 7.0;

  std::vector<Vec2> points() const;
};

/// CSV rows (t, x, y, u, v) with (u, v) the predictor output at (x, y, t).
/// For the Noise objective two more columns give the implied score
/// -output / sqrt(1 - abar_t); when `target` is supplied, the exact diffused
/// score follows as true_score_u, true_score_v.
std::string vector_field_csv(const Predictor& predictor, Objective objective, const Schedule& schedule,
                             std::span<const int> t_list, const GridSpec& grid, const GmmTarget* target = nullptr);
void export_vector_field(const std::filesystem::path& path, const Predictor& predictor, Objective objective,
                         const Schedule& schedule, std::span<const int> t_list, const GridSpec& grid,
                         const GmmTarget* target = nullptr);

}  // namespace difflab
