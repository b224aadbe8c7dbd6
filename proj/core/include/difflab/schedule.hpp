#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace difflab {

enum class ScheduleKind { Linear, Cosine };

std::string to_string(ScheduleKind kind);
/// Parses "linear" / "cosine"; throws UsageError otherwise.
ScheduleKind parse_schedule_kind(const std::string& name);

inline constexpr double kMaxBeta = 0.999;
inline constexpr double kDefaultCosineOffset = 0.008;

/// Variance schedule over steps t = 0 .. T-1, where t = 0 is the first
/// noising step. Immutable once built.
///
/// Invariants: alpha[t] = 1 - beta[t]; alpha_bar[t] is the running product of
/// alpha; 0 < beta[t] <= 0.999, so alpha_bar is strictly decreasing and
/// positive.
class Schedule {
 public:
  /// beta[t] interpolates beta_start..beta_end inclusive.
  /// Requires T >= 1 and 0 < beta_start <= beta_end < 1.
  static Schedule linear(int T, double beta_start, double beta_end);

  /// Linear schedule with the conventional endpoints 1e-4 and 0.02 rescaled
  /// by 1000/T (each clipped at kMaxBeta).
  static Schedule linear_default(int T);

  /// Cosine schedule: alpha_bar follows f(t+1)/f(0) with
  /// f(u) = cos^2(((u/T + s)/(1 + s)) * pi/2); beta is clipped at kMaxBeta
  /// and alpha_bar recomputed from the clipped betas. Requires s > 0.
  static Schedule cosine(int T, double s = kDefaultCosineOffset);

  /// Rebuilds a schedule from explicit betas (e.g. a parsed dump).
  static Schedule from_betas(ScheduleKind kind, std::vector<double> betas);

  static Schedule make(ScheduleKind kind, int T);

  int steps() const { return static_cast<int>(beta_.size()); }
  ScheduleKind kind() const { return kind_; }

  double beta(int t) const { return beta_.at(static_cast<std::size_t>(t)); }
  double alpha(int t) const { return alpha_.at(static_cast<std::size_t>(t)); }
  double alpha_bar(int t) const { return alpha_bar_.at(static_cast<std::size_t>(t)); }
  /// alpha_bar[t-1], with alpha_bar[-1] = 1.
  double alpha_bar_prev(int t) const { return t == 0 ? 1.0 : alpha_bar(t - 1); }

  std::span<const double> betas() const { return beta_; }
  std::span<const double> alphas() const { return alpha_; }
  std::span<const double> alpha_bars() const { return alpha_bar_; }

  /// Throws std::out_of_range unless 0 <= t < T.
  void check_step(int t) const;

 private:
  Schedule(ScheduleKind kind, std::vector<double> betas);

  ScheduleKind kind_;
  std::vector<double> beta_;
  std::vector<double> alpha_;
  std::vector<double> alpha_bar_;
};

/// CSV with columns t,beta,alpha,alpha_bar (shortest round-trip doubles).
std::string schedule_csv(const Schedule& schedule);
void dump(const Schedule& schedule, const std::filesystem::path& path);
Schedule load_schedule(ScheduleKind kind, const std::filesystem::path& path);

}  // namespace difflab
