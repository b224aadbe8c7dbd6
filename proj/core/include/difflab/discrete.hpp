#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "difflab/common.hpp"
#include "difflab/rng.hpp"
#include "difflab/schedule.hpp"

namespace difflab::discrete {

/// Dense d x d matrix, row-major.
class SquareMatrix {
 public:
  explicit SquareMatrix(std::size_t d = 0) : d_(d), data_(d * d, 0.0) {}
  static SquareMatrix identity(std::size_t d);

  std::size_t dim() const { return d_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * d_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * d_ + j]; }
  std::span<const double> row(std::size_t i) const { return std::span(data_).subspan(i * d_, d_); }

  friend SquareMatrix operator*(const SquareMatrix& a, const SquareMatrix& b);

 private:
  std::size_t d_;
  std::vector<double> data_;
};

/// Categorical state as a one-hot vector over d states.
class OneHot {
 public:
  /// Throws UsageError unless index < dim.
  OneHot(std::size_t dim, std::size_t index);
  /// Throws UsageError unless `v` has exactly one 1 and zeros elsewhere.
  static OneHot from_vector(std::span<const double> v);

  std::size_t dim() const { return dim_; }
  std::size_t index() const { return index_; }
  std::vector<double> to_vector() const;

 private:
  std::size_t dim_;
  std::size_t index_;
};

/// Per-step transition matrices Q[t] (row i: distribution of the next state
/// given state i) and running products Qbar[t] = Q[0] ... Q[t].
class TransitionChain {
 public:
  /// Throws UsageError unless every matrix is d x d with non-negative entries
  /// and rows summing to 1 within 1e-12.
  explicit TransitionChain(std::vector<SquareMatrix> q);

  std::size_t dim() const { return q_.front().dim(); }
  int steps() const { return static_cast<int>(q_.size()); }
  const SquareMatrix& q(int t) const { return q_.at(static_cast<std::size_t>(t)); }
  const SquareMatrix& qbar(int t) const { return qbar_.at(static_cast<std::size_t>(t)); }

 private:
  std::vector<SquareMatrix> q_;
  std::vector<SquareMatrix> qbar_;
};

/// Q[t] = (1 - beta_t) I + beta_t / d * 11^T. Requires d >= 2.
TransitionChain make_uniform_chain(std::size_t d, std::span<const double> betas);
TransitionChain make_uniform_chain(std::size_t d, const Schedule& schedule);

/// Q[t] = (1 - beta_t) I + beta_t 1 m^T for a probability vector m.
TransitionChain make_marginal_chain(std::size_t d, std::span<const double> betas, std::span<const double> marginals);
TransitionChain make_marginal_chain(std::size_t d, const Schedule& schedule, std::span<const double> marginals);

/// q(x_t | x_0): row of Qbar[t] selected by x0.
std::vector<double> marginal(const OneHot& x0, const TransitionChain& chain, int t);

/// Raised when the conditioning event has probability zero.
class ImpossibleEvidence : public NumericError {
 public:
  using NumericError::NumericError;
};

/// q(x_{t-1} | x_t, x_0) for 1 <= t < T:
/// Q[t](:, x_t) * (x0 Qbar[t-1]) / (x0 Qbar[t] x_t^T), elementwise.
std::vector<double> posterior(const OneHot& xt, const OneHot& x0, const TransitionChain& chain, int t);

/// p(x_{t-1}) proportional to sum_{x0} q(x_{t-1} | x_t, x0) p0(x0): the exact
/// posterior mixed over the predicted clean state. Clean states with
/// q(x_t | x0) = 0 and predecessors with q(x_t | x_{t-1}) = 0 contribute
/// nothing; the result is renormalised. Throws ImpossibleEvidence if every
/// term vanishes.
std::vector<double> reverse_distribution(const OneHot& xt, std::span<const double> predicted_p0,
                                         const TransitionChain& chain, int t);

/// Last reverse step: p(clean) proportional to p0(x) restricted to states x
/// with Q[0](x, x_0) > 0.
std::vector<double> final_distribution(const OneHot& x0, std::span<const double> predicted_p0,
                                       const TransitionChain& chain);

/// Two groups of categorical variables and the weight of group B.
struct GroupedSample {
  std::vector<OneHot> group_a;
  std::vector<OneHot> group_b;
  double lambda = 1.0;
};

/// sum_A CE(x_i, p_i) + lambda * sum_B CE(e_j, p_j), natural log. Returns
/// +infinity when a true class has zero predicted probability.
double grouped_cross_entropy(std::span<const std::vector<double>> predictions_a,
                             std::span<const std::vector<double>> predictions_b, const GroupedSample& truth);

/// Draws an index from a probability vector.
std::size_t sample_categorical(std::span<const double> p, Rng& rng);

/// Predicted p(x_0 | x_t) for one variable.
using CategoricalPredictor = std::function<std::vector<double>(const OneHot& xt, int t)>;

/// Full reverse chain for one variable: from the state after step T-1 down
/// through reverse_distribution at t = T-1 .. 1 and final_distribution.
OneHot sample_reverse(const OneHot& terminal, const CategoricalPredictor& predictor, const TransitionChain& chain,
                      Rng& rng);

inline bool is_infinite_loss(double loss) { return loss == std::numeric_limits<double>::infinity(); }

/// CSV "t,i,j,Q_ij" over all steps.
std::string chain_csv(const TransitionChain& chain);
void dump_chain(const TransitionChain& chain, const std::filesystem::path& path);

enum class ChainKind { Uniform, Marginal };
std::string to_string(ChainKind kind);
ChainKind parse_chain_kind(const std::string& name);

struct DemoConfig {
  std::size_t d = 8;        // states per axis, 2..8
  int T = 20;               // 1..20
  ChainKind chain = ChainKind::Marginal;
  std::size_t n_train = 10000;
  std::size_t n_samples = 10000;
  int epochs = 50;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  double lambda = 1.0;
  std::uint64_t seed = 0;
  /// Optional explicit categorical data (state per axis). When absent, the
  /// default 2-D mixture is sampled and quantised into d bins over [-7, 7].
  std::optional<std::vector<std::pair<std::size_t, std::size_t>>> data;
  /// Optional explicit betas (length T); defaults to the cosine schedule.
  std::optional<std::vector<double>> betas;

  void validate() const;
};

struct DemoMetrics {
  std::array<std::vector<double>, 2> training_marginals;
  std::array<std::vector<double>, 2> generated_marginals;
  std::array<double, 2> total_variation{};
  double mean_total_variation = 0.0;
  std::vector<double> loss_trace;  // mean grouped cross-entropy per epoch
  std::vector<std::pair<std::size_t, std::size_t>> samples;
};

/// Bin index of `v` among d equal bins over [-7, 7] (clamped).
std::size_t quantize(double v, std::size_t d);

/// Trains a softmax MLP to predict p(x_0 | x_t) for both axes (group A = x
/// axis, group B = y axis), samples with reverse_distribution, and reports
/// total variation between generated and training marginals per axis.
DemoMetrics demo_run(const DemoConfig& config);

/// JSON document with the metrics and the configuration that produced them.
std::string demo_metrics_json(const DemoConfig& config, const DemoMetrics& metrics);

}  // namespace difflab::discrete
