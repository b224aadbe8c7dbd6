#include "difflab/eval.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "difflab/forward.hpp"
#include "difflab/io.hpp"

namespace difflab {

namespace {

inline double dist(const Vec2& a, const Vec2& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

// Sum over all ordered pairs, reduced row by row in a fixed order.
double cross_sum(std::span<const Vec2> a, std::span<const Vec2> b) {
  double total = 0.0;
  for (const auto& p : a) {
    double row = 0.0;
    for (const auto& q : b) row += dist(p, q);
    total += row;
  }
  return total;
}

bool canonical_first(std::span<const Vec2> a, std::span<const Vec2> b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return !std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end(), [](const Vec2& l, const Vec2& r) {
    return l.x < r.x || (l.x == r.x && l.y < r.y);
  });
}

}  // namespace

double energy_distance(std::span<const Vec2> a, std::span<const Vec2> b) {
  if (a.empty() || b.empty()) throw UsageError("energy_distance: sample sets must be nonempty");
  // Canonical outer/inner order keeps d(a, b) == d(b, a) exactly.
  if (!canonical_first(a, b)) std::swap(a, b);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double cross = cross_sum(a, b) / (na * nb);
  // Full ordered-pair sums for the within terms too, so d(a, a) is exactly 0.
  const double within = cross_sum(a, a) / (na * na) + cross_sum(b, b) / (nb * nb);
  return 2.0 * cross - within;
}

ModeStats assign_modes(std::span<const Vec2> samples, const GmmTarget& target) {
  const std::size_t k = target.size();
  ModeStats stats;
  stats.labels.reserve(samples.size());
  std::vector<std::size_t> counts(k, 0);
  std::vector<Vec2> sum(k);
  std::vector<Vec2> sum_sq(k);
  for (const auto& p : samples) {
    const int label = nearest_mode(target, p);
    stats.labels.push_back(label);
    ++counts[static_cast<std::size_t>(label)];
    sum[static_cast<std::size_t>(label)] += p;
  }
  std::vector<Vec2> mean(k);
  for (std::size_t m = 0; m < k; ++m) {
    if (counts[m] > 0) mean[m] = (1.0 / static_cast<double>(counts[m])) * sum[m];
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto m = static_cast<std::size_t>(stats.labels[i]);
    const Vec2 d = samples[i] - mean[m];
    sum_sq[m] += Vec2{d.x * d.x, d.y * d.y};
  }
  stats.fractions.resize(k, 0.0);
  stats.per_mode_std.resize(k);
  for (std::size_t m = 0; m < k; ++m) {
    if (samples.empty() || counts[m] == 0) continue;
    stats.fractions[m] = static_cast<double>(counts[m]) / static_cast<double>(samples.size());
    const double c = static_cast<double>(counts[m]);
    stats.per_mode_std[m] = {std::sqrt(sum_sq[m].x / c), std::sqrt(sum_sq[m].y / c)};
  }
  return stats;
}

double mean_log_likelihood(std::span<const Vec2> samples, const GmmTarget& target) {
  if (samples.empty()) throw UsageError("mean_log_likelihood: no samples");
  double s = 0.0;
  for (const auto& p : samples) s += log_density(target, p);
  return s / static_cast<double>(samples.size());
}

double positional_bias(const Trajectory& trajectory, const GmmTarget& target) {
  if (trajectory.snapshots.size() < 2) throw UsageError("positional_bias: need first and last snapshots");
  const auto& start = trajectory.first().points;
  const auto& end = trajectory.last().points;
  if (start.size() != end.size() || start.empty()) throw UsageError("positional_bias: snapshot sizes differ");
  std::size_t same = 0;
  for (std::size_t i = 0; i < start.size(); ++i) {
    if (nearest_mode(target, start[i]) == nearest_mode(target, end[i])) ++same;
  }
  return static_cast<double>(same) / static_cast<double>(start.size());
}

MetricsReport evaluate(std::span<const Vec2> samples, std::span<const Vec2> reference, const GmmTarget& target,
                       const Trajectory* trajectory) {
  MetricsReport r;
  r.energy_distance = energy_distance(samples, reference);
  r.mean_log_likelihood = mean_log_likelihood(samples, target);
  const ModeStats modes = assign_modes(samples, target);
  r.mode_fractions = modes.fractions;
  r.per_mode_std = modes.per_mode_std;
  if (trajectory != nullptr) r.positional_bias = positional_bias(*trajectory, target);
  return r;
}

std::string metrics_json(const MetricsReport& report) {
  nlohmann::ordered_json j;
  j["energy_distance"] = report.energy_distance;
  j["mean_log_likelihood"] = report.mean_log_likelihood;
  j["mode_fractions"] = report.mode_fractions;
  auto& stds = j["per_mode_std"] = nlohmann::ordered_json::array();
  for (const auto& s : report.per_mode_std) stds.push_back({s.x, s.y});
  j["positional_bias"] = report.positional_bias ? nlohmann::ordered_json(*report.positional_bias)
                                                : nlohmann::ordered_json(nullptr);
  return j.dump(2) + "\n";
}

std::vector<Vec2> GridSpec::points() const {
  if (n == 0) throw UsageError("grid needs at least one point per axis");
  if (!(lo >= -7.0 && hi <= 7.0 && lo <= hi)) throw UsageError("grid must lie within [-7, 7]");
  std::vector<Vec2> pts;
  pts.reserve(n * n);
  const double step = n == 1 ? 0.0 : (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      pts.push_back({lo + step * static_cast<double>(i), lo + step * static_cast<double>(j)});
    }
  }
  return pts;
}

std::string vector_field_csv(const Predictor& predictor, Objective objective, const Schedule& schedule,
                             std::span<const int> t_list, const GridSpec& grid, const GmmTarget* target) {
  const bool with_score = objective == Objective::Noise;
  const bool with_truth = with_score && target != nullptr;
  std::string out = "t,x,y,u,v";
  if (with_score) out += ",score_u,score_v";
  if (with_truth) out += ",true_score_u,true_score_v";
  out += '\n';
  const auto pts = grid.points();
  for (int t : t_list) {
    schedule.check_step(t);
    const double scale = 1.0 / std::sqrt(1.0 - schedule.alpha_bar(t));
    for (const auto& p : pts) {
      const Vec2 o = predictor(p, t);
      out += std::to_string(t) + ',' + io::format_double(p.x) + ',' + io::format_double(p.y) + ',' +
             io::format_double(o.x) + ',' + io::format_double(o.y);
      if (with_score) out += ',' + io::format_double(-scale * o.x) + ',' + io::format_double(-scale * o.y);
      if (with_truth) {
        const Vec2 s = diffused_score(*target, schedule, t, p);
        out += ',' + io::format_double(s.x) + ',' + io::format_double(s.y);
      }
      out += '\n';
    }
  }
  return out;
}

void export_vector_field(const std::filesystem::path& path, const Predictor& predictor, Objective objective,
                         const Schedule& schedule, std::span<const int> t_list, const GridSpec& grid,
                         const GmmTarget* target) {
  io::write_file(path, vector_field_csv(predictor, objective, schedule, t_list, grid, target));
}

}  // namespace difflab
