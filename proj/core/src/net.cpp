#include "difflab/net.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "difflab/io.hpp"
#include "difflab/rng.hpp"

namespace difflab {

MlpLayout MlpLayout::of(const MlpShape& s) {
  MlpLayout l{};
  l.w1 = 0;
  l.b1 = l.w1 + s.hidden * s.inputs;
  l.w2 = l.b1 + s.hidden;
  l.b2 = l.w2 + s.hidden * s.hidden;
  l.w3 = l.b2 + s.hidden;
  l.b3 = l.w3 + s.outputs * s.hidden;
  l.end = l.b3 + s.outputs;
  return l;
}

Mlp::Mlp(MlpShape shape) : shape_(shape), params_(shape.parameter_count(), 0.0) {
  if (shape.inputs == 0 || shape.hidden == 0 || shape.outputs == 0) {
    throw UsageError("Mlp: layer sizes must be positive");
  }
}

Mlp Mlp::init(std::uint64_t seed, MlpShape shape) {
  Mlp mlp(shape);
  Rng rng(seed);
  const MlpLayout l = MlpLayout::of(shape);
  auto fill = [&](std::size_t begin, std::size_t count, std::size_t fan_in) {
    const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
    for (std::size_t i = 0; i < count; ++i) mlp.params_[begin + i] = bound * (2.0 * rng.uniform() - 1.0);
  };
  fill(l.w1, shape.hidden * shape.inputs, shape.inputs);
  fill(l.w2, shape.hidden * shape.hidden, shape.hidden);
  fill(l.w3, shape.outputs * shape.hidden, shape.hidden);
  return mlp;
}

namespace {

// Activations of one pass; pre-activations are kept for the ReLU masks.
struct Activations {
  std::vector<double> z1, h1, z2, h2;
};

void dense(std::span<const double> w, std::span<const double> b, std::span<const double> in,
           std::span<double> out) {
  const std::size_t n_in = in.size();
  for (std::size_t r = 0; r < out.size(); ++r) {
    double acc = b[r];
    const double* row = w.data() + r * n_in;
    for (std::size_t c = 0; c < n_in; ++c) acc += row[c] * in[c];
    out[r] = acc;
  }
}

void run_forward(const MlpShape& s, std::span<const double> p, std::span<const double> input, Activations& a,
                 std::span<double> output) {
  const MlpLayout l = MlpLayout::of(s);
  a.z1.resize(s.hidden);
  a.h1.resize(s.hidden);
  a.z2.resize(s.hidden);
  a.h2.resize(s.hidden);
  dense(p.subspan(l.w1, s.hidden * s.inputs), p.subspan(l.b1, s.hidden), input, a.z1);
  for (std::size_t i = 0; i < s.hidden; ++i) a.h1[i] = a.z1[i] > 0.0 ? a.z1[i] : 0.0;
  dense(p.subspan(l.w2, s.hidden * s.hidden), p.subspan(l.b2, s.hidden), a.h1, a.z2);
  for (std::size_t i = 0; i < s.hidden; ++i) a.h2[i] = a.z2[i] > 0.0 ? a.z2[i] : 0.0;
  dense(p.subspan(l.w3, s.outputs * s.hidden), p.subspan(l.b3, s.outputs), a.h2, output);
}

void check_input(const MlpShape& s, std::span<const double> input) {
  if (input.size() != s.inputs) throw UsageError("Mlp: input dimension mismatch");
}

}  // namespace

void Mlp::forward(std::span<const double> input, std::span<double> output) const {
  check_input(shape_, input);
  if (output.size() != shape_.outputs) throw UsageError("Mlp: output dimension mismatch");
  Activations a;
  run_forward(shape_, params_, input, a, output);
}

std::vector<double> Mlp::forward(std::span<const double> input) const {
  std::vector<double> out(shape_.outputs);
  forward(input, out);
  return out;
}

bool Mlp::finite() const {
  return std::all_of(params_.begin(), params_.end(), [](double v) { return std::isfinite(v); });
}

Vec2 predict(const Mlp& mlp, const Vec2& x, double t_norm) {
  const double in[3] = {x.x, x.y, t_norm};
  double out[2];
  mlp.forward(in, out);
  return {out[0], out[1]};
}

void backprop(const Mlp& mlp, std::span<const double> input, const OutputGrad& output_grad,
              std::span<double> grads) {
  const MlpShape& s = mlp.shape();
  check_input(s, input);
  if (grads.size() != s.parameter_count()) throw UsageError("backprop: gradient size mismatch");
  const MlpLayout l = MlpLayout::of(s);
  const auto p = mlp.params();

  Activations a;
  std::vector<double> out(s.outputs);
  run_forward(s, p, input, a, out);
  std::vector<double> d_out(s.outputs, 0.0);
  output_grad(out, d_out);

  // Layer 3.
  std::vector<double> d_h2(s.hidden, 0.0);
  for (std::size_t r = 0; r < s.outputs; ++r) {
    grads[l.b3 + r] += d_out[r];
    for (std::size_t c = 0; c < s.hidden; ++c) {
      grads[l.w3 + r * s.hidden + c] += d_out[r] * a.h2[c];
      d_h2[c] += p[l.w3 + r * s.hidden + c] * d_out[r];
    }
  }
  // Layer 2.
  std::vector<double> d_h1(s.hidden, 0.0);
  for (std::size_t r = 0; r < s.hidden; ++r) {
    const double dz = a.z2[r] > 0.0 ? d_h2[r] : 0.0;
    if (dz == 0.0) continue;
    grads[l.b2 + r] += dz;
    for (std::size_t c = 0; c < s.hidden; ++c) {
      grads[l.w2 + r * s.hidden + c] += dz * a.h1[c];
      d_h1[c] += p[l.w2 + r * s.hidden + c] * dz;
    }
  }
  // Layer 1.
  for (std::size_t r = 0; r < s.hidden; ++r) {
    const double dz = a.z1[r] > 0.0 ? d_h1[r] : 0.0;
    if (dz == 0.0) continue;
    grads[l.b1 + r] += dz;
    for (std::size_t c = 0; c < s.inputs; ++c) grads[l.w1 + r * s.inputs + c] += dz * input[c];
  }
}

LossAndGradients mse_backward(const Mlp& mlp, std::span<const double> inputs, std::span<const double> targets) {
  const MlpShape& s = mlp.shape();
  if (inputs.empty() || inputs.size() % s.inputs != 0) throw UsageError("mse_backward: bad input batch");
  const std::size_t n = inputs.size() / s.inputs;
  if (targets.size() != n * s.outputs) throw UsageError("mse_backward: target batch size mismatch");

  LossAndGradients result{0.0, Gradients(s)};
  const double scale = 1.0 / static_cast<double>(n * s.outputs);
  for (std::size_t i = 0; i < n; ++i) {
    const auto target = targets.subspan(i * s.outputs, s.outputs);
    backprop(mlp, inputs.subspan(i * s.inputs, s.inputs),
             [&](std::span<const double> out, std::span<double> d_out) {
               for (std::size_t k = 0; k < out.size(); ++k) {
                 const double r = out[k] - target[k];
                 result.loss += r * r;
                 d_out[k] = 2.0 * r * scale;
               }
             },
             result.grads.values);
  }
  result.loss *= scale;
  return result;
}

std::string checkpoint_json(const Checkpoint& checkpoint) {
  const MlpShape& s = checkpoint.mlp.shape();
  nlohmann::ordered_json j;
  j["format"] = "difflab-mlp";
  j["version"] = 1;
  j["architecture"] = {{"inputs", s.inputs},
                       {"hidden", s.hidden},
                       {"outputs", s.outputs},
                       {"activation", "relu"},
                       {"parameters", s.parameter_count()}};
  j["meta"] = checkpoint.meta;
  j["params"] = std::vector<double>(checkpoint.mlp.params().begin(), checkpoint.mlp.params().end());
  return j.dump(1) + "\n";
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  io::write_file(path, checkpoint_json(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const MlpShape& expected) {
  const std::string text = io::read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("checkpoint " + path.string() + ": " + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "difflab-mlp") throw UsageError("not a difflab checkpoint");
    const auto& arch = j.at("architecture");
    const MlpShape shape{arch.at("inputs").get<std::size_t>(), arch.at("hidden").get<std::size_t>(),
                         arch.at("outputs").get<std::size_t>()};
    if (!(shape == expected)) {
      throw UsageError("checkpoint " + path.string() + ": architecture does not match the expected network");
    }
    const auto params = j.at("params").get<std::vector<double>>();
    if (params.size() != shape.parameter_count()) {
      throw UsageError("checkpoint " + path.string() + ": parameter count mismatch");
    }
    Checkpoint cp{Mlp(shape), j.at("meta").get<std::map<std::string, std::string>>()};
    std::copy(params.begin(), params.end(), cp.mlp.params().begin());
    return cp;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("checkpoint " + path.string() + ": " + e.what());
  }
}

}  // namespace difflab
