#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "difflab/common.hpp"

namespace difflab {

/// in -> hidden (relu) -> hidden (relu) -> out. The default is the 2-D
/// regression network: input (x, y, t/T), output a 2-vector, 542 parameters.
struct MlpShape {
  std::size_t inputs = 3;
  std::size_t hidden = 20;
  std::size_t outputs = 2;

  std::size_t parameter_count() const {
    return hidden * inputs + hidden + hidden * hidden + hidden + outputs * hidden + outputs;
  }
  friend bool operator==(const MlpShape&, const MlpShape&) = default;
};

/// Offsets of each parameter block inside the flat parameter vector.
/// Order: W1 (hidden x inputs, row-major), b1, W2, b2, W3, b3.
struct MlpLayout {
  std::size_t w1, b1, w2, b2, w3, b3, end;
  static MlpLayout of(const MlpShape& shape);
};

class Mlp {
 public:
  /// All-zero parameters.
  explicit Mlp(MlpShape shape = {});

  /// Weights ~ U(-sqrt(1/fan_in), sqrt(1/fan_in)) per layer, biases zero.
  static Mlp init(std::uint64_t seed, MlpShape shape = {});

  const MlpShape& shape() const { return shape_; }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  void forward(std::span<const double> input, std::span<double> output) const;
  std::vector<double> forward(std::span<const double> input) const;

  /// True iff every parameter is finite.
  bool finite() const;

 private:
  MlpShape shape_;
  std::vector<double> params_;
};

/// Convenience for the 2-D network: forward on (x.x, x.y, t_norm).
Vec2 predict(const Mlp& mlp, const Vec2& x, double t_norm);

/// Gradient flat vector, congruent with Mlp::params().
struct Gradients {
  MlpShape shape;
  std::vector<double> values;

  explicit Gradients(MlpShape s) : shape(s), values(s.parameter_count(), 0.0) {}
};

/// Callback giving dLoss/dOutput for a computed output.
using OutputGrad = std::function<void(std::span<const double> output, std::span<double> d_output)>;

/// One forward/backward pass for a single input; adds parameter gradients
/// into `grads`. The ReLU derivative at exactly 0 is taken as 0.
void backprop(const Mlp& mlp, std::span<const double> input, const OutputGrad& output_grad,
              std::span<double> grads);

struct LossAndGradients {
  double loss = 0.0;
  Gradients grads;
};

/// Mean squared error over batch and output dimensions with exact gradients.
/// `inputs` is row-major N x inputs, `targets` row-major N x outputs; N >= 1.
LossAndGradients mse_backward(const Mlp& mlp, std::span<const double> inputs, std::span<const double> targets);

/// Network plus string metadata (objective, schedule, forward kind, T, ...).
struct Checkpoint {
  Mlp mlp;
  std::map<std::string, std::string> meta;
};

/// JSON checkpoint: architecture header, metadata, and all parameters in
/// layout order.
std::string checkpoint_json(const Checkpoint& checkpoint);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
/// Throws InputMissingError for unreadable files and UsageError for
/// malformed content or an architecture that does not match `expected`.
Checkpoint load_checkpoint(const std::filesystem::path& path, const MlpShape& expected = {});

}  // namespace difflab
