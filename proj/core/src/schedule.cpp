#include "difflab/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "difflab/common.hpp"
#include "difflab/io.hpp"

namespace difflab {

std::string to_string(ScheduleKind kind) {
  return kind == ScheduleKind::Linear ? "linear" : "cosine";
}

ScheduleKind parse_schedule_kind(const std::string& name) {
  if (name == "linear") return ScheduleKind::Linear;
  if (name == "cosine") return ScheduleKind::Cosine;
  throw UsageError("unknown schedule kind '" + name + "' (expected linear|cosine)");
}

Schedule::Schedule(ScheduleKind kind, std::vector<double> betas) : kind_(kind), beta_(std::move(betas)) {
  if (beta_.empty()) throw UsageError("schedule needs T >= 1");
  alpha_.resize(beta_.size());
  alpha_bar_.resize(beta_.size());
  double running = 1.0;
  for (std::size_t t = 0; t < beta_.size(); ++t) {
    const double b = beta_[t];
    if (!(b > 0.0 && b <= kMaxBeta)) {
      throw UsageError("beta[" + std::to_string(t) + "] = " + io::format_double(b) +
                       " outside (0, 0.999]");
    }
    alpha_[t] = 1.0 - b;
    running *= alpha_[t];
    alpha_bar_[t] = running;
  }
}

Schedule Schedule::linear(int T, double beta_start, double beta_end) {
  if (T < 1) throw UsageError("linear schedule: T must be >= 1");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
    throw UsageError("linear schedule: need 0 < beta_start <= beta_end < 1");
  }
  std::vector<double> betas(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) {
    const double frac = T == 1 ? 0.0 : static_cast<double>(t) / (T - 1);
    betas[static_cast<std::size_t>(t)] = beta_start + frac * (beta_end - beta_start);
  }
  return Schedule(ScheduleKind::Linear, std::move(betas));
}

Schedule Schedule::linear_default(int T) {
  if (T < 1) throw UsageError("linear schedule: T must be >= 1");
  const double scale = 1000.0 / T;
  return linear(T, std::min(1e-4 * scale, kMaxBeta), std::min(0.02 * scale, kMaxBeta));
}

Schedule Schedule::cosine(int T, double s) {
  if (T < 1) throw UsageError("cosine schedule: T must be >= 1");
  if (!(s > 0.0)) throw UsageError("cosine schedule: offset s must be > 0");
  auto f = [T, s](double u) {
    const double c = std::cos((u / T + s) / (1.0 + s) * std::numbers::pi / 2.0);
    return c * c;
  };
  const double f0 = f(0.0);
  std::vector<double> betas(static_cast<std::size_t>(T));
  double prev = 1.0;
  for (int t = 0; t < T; ++t) {
    const double ab = f(t + 1.0) / f0;
    betas[static_cast<std::size_t>(t)] = std::min(1.0 - ab / prev, kMaxBeta);
    prev = ab;
  }
  return Schedule(ScheduleKind::Cosine, std::move(betas));
}

Schedule Schedule::from_betas(ScheduleKind kind, std::vector<double> betas) {
  return Schedule(kind, std::move(betas));
}

Schedule Schedule::make(ScheduleKind kind, int T) {
  return kind == ScheduleKind::Linear ? linear_default(T) : cosine(T);
}

void Schedule::check_step(int t) const {
  if (t < 0 || t >= steps()) {
    throw std::out_of_range("timestep " + std::to_string(t) + " outside [0, " +
                            std::to_string(steps()) + ")");
  }
}

std::string schedule_csv(const Schedule& schedule) {
  std::string out = "t,beta,alpha,alpha_bar\n";
  for (int t = 0; t < schedule.steps(); ++t) {
    out += std::to_string(t) + ',' + io::format_double(schedule.beta(t)) + ',' +
           io::format_double(schedule.alpha(t)) + ',' + io::format_double(schedule.alpha_bar(t)) + '\n';
  }
  return out;
}

void dump(const Schedule& schedule, const std::filesystem::path& path) {
  io::write_file(path, schedule_csv(schedule));
}

Schedule load_schedule(ScheduleKind kind, const std::filesystem::path& path) {
  const io::CsvTable table = io::read_csv(path);
  const std::size_t col = table.column("beta");
  std::vector<double> betas;
  betas.reserve(table.rows.size());
  for (const auto& row : table.rows) betas.push_back(row[col]);
  return Schedule::from_betas(kind, std::move(betas));
}

}  // namespace difflab
