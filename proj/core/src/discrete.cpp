#include "difflab/discrete.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "difflab/io.hpp"
#include "difflab/net.hpp"
#include "difflab/target.hpp"
#include "difflab/train.hpp"

namespace difflab::discrete {

SquareMatrix SquareMatrix::identity(std::size_t d) {
  SquareMatrix m(d);
  for (std::size_t i = 0; i < d; ++i) m(i, i) = 1.0;
  return m;
}

SquareMatrix operator*(const SquareMatrix& a, const SquareMatrix& b) {
  if (a.dim() != b.dim()) throw UsageError("matrix dimension mismatch");
  const std::size_t d = a.dim();
  SquareMatrix c(d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t k = 0; k < d; ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < d; ++j) c(i, j) += aik * b(k, j);
    }
  }
  return c;
}

OneHot::OneHot(std::size_t dim, std::size_t index) : dim_(dim), index_(index) {
  if (index >= dim) throw UsageError("one-hot index out of range");
}

OneHot OneHot::from_vector(std::span<const double> v) {
  std::size_t ones = 0;
  std::size_t at = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] == 1.0) {
      ++ones;
      at = i;
    } else if (v[i] != 0.0) {
      throw UsageError("one-hot entries must be 0 or 1");
    }
  }
  if (ones != 1) throw UsageError("one-hot vector must contain exactly one 1");
  return OneHot(v.size(), at);
}

std::vector<double> OneHot::to_vector() const {
  std::vector<double> v(dim_, 0.0);
  v[index_] = 1.0;
  return v;
}

TransitionChain::TransitionChain(std::vector<SquareMatrix> q) : q_(std::move(q)) {
  if (q_.empty()) throw UsageError("transition chain needs at least one step");
  const std::size_t d = q_.front().dim();
  if (d < 1) throw UsageError("transition chain needs at least one state");
  for (const auto& m : q_) {
    if (m.dim() != d) throw UsageError("transition matrices differ in size");
    for (std::size_t i = 0; i < d; ++i) {
      double sum = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        if (!(m(i, j) >= 0.0)) throw UsageError("transition probabilities must be non-negative");
        sum += m(i, j);
      }
      if (std::abs(sum - 1.0) > 1e-12) throw UsageError("transition matrix rows must sum to 1");
    }
  }
  qbar_.reserve(q_.size());
  qbar_.push_back(q_.front());
  for (std::size_t t = 1; t < q_.size(); ++t) qbar_.push_back(qbar_.back() * q_[t]);
}

namespace {

void check_betas(std::span<const double> betas) {
  if (betas.empty()) throw UsageError("chain needs at least one beta");
  for (double b : betas) {
    if (!(b >= 0.0 && b <= 1.0)) throw UsageError("chain beta outside [0, 1]");
  }
}

void check_distribution(std::span<const double> p, std::size_t d, const char* what) {
  if (p.size() != d) throw UsageError(std::string(what) + ": wrong length");
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) throw UsageError(std::string(what) + ": negative or NaN probability");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw UsageError(std::string(what) + ": does not sum to 1");
}

TransitionChain mixing_chain(std::size_t d, std::span<const double> betas, std::span<const double> limit) {
  check_betas(betas);
  std::vector<SquareMatrix> qs;
  qs.reserve(betas.size());
  for (double b : betas) {
    SquareMatrix m(d);
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) m(i, j) = b * limit[j] + (i == j ? 1.0 - b : 0.0);
    }
    qs.push_back(std::move(m));
  }
  return TransitionChain(std::move(qs));
}

void check_state(const OneHot& x, const TransitionChain& chain) {
  if (x.dim() != chain.dim()) throw UsageError("one-hot dimension does not match the chain");
}

}  // namespace

TransitionChain make_uniform_chain(std::size_t d, std::span<const double> betas) {
  if (d < 2) throw UsageError("uniform chain needs d >= 2");
  const std::vector<double> uniform(d, 1.0 / static_cast<double>(d));
  return mixing_chain(d, betas, uniform);
}

TransitionChain make_uniform_chain(std::size_t d, const Schedule& schedule) {
  return make_uniform_chain(d, schedule.betas());
}

TransitionChain make_marginal_chain(std::size_t d, std::span<const double> betas, std::span<const double> marginals) {
  if (d < 2) throw UsageError("marginal chain needs d >= 2");
  check_distribution(marginals, d, "marginals");
  return mixing_chain(d, betas, marginals);
}

TransitionChain make_marginal_chain(std::size_t d, const Schedule& schedule, std::span<const double> marginals) {
  return make_marginal_chain(d, schedule.betas(), marginals);
}

std::vector<double> marginal(const OneHot& x0, const TransitionChain& chain, int t) {
  check_state(x0, chain);
  if (t < 0 || t >= chain.steps()) throw std::out_of_range("marginal: timestep out of range");
  const auto row = chain.qbar(t).row(x0.index());
  return {row.begin(), row.end()};
}

std::vector<double> posterior(const OneHot& xt, const OneHot& x0, const TransitionChain& chain, int t) {
  check_state(xt, chain);
  check_state(x0, chain);
  if (t < 1 || t >= chain.steps()) throw std::out_of_range("posterior: timestep out of range");
  const double evidence = chain.qbar(t)(x0.index(), xt.index());
  if (!(evidence > 0.0)) throw ImpossibleEvidence("posterior: x_t has zero probability given x_0");
  const std::size_t d = chain.dim();
  const SquareMatrix& q = chain.q(t);
  const SquareMatrix& prev = chain.qbar(t - 1);
  std::vector<double> out(d);
  for (std::size_t j = 0; j < d; ++j) out[j] = q(j, xt.index()) * prev(x0.index(), j) / evidence;
  return out;
}

std::vector<double> reverse_distribution(const OneHot& xt, std::span<const double> predicted_p0,
                                         const TransitionChain& chain, int t) {
  check_state(xt, chain);
  check_distribution(predicted_p0, chain.dim(), "predicted_p0");
  if (t < 1 || t >= chain.steps()) throw std::out_of_range("reverse_distribution: timestep out of range");
  const std::size_t d = chain.dim();
  const SquareMatrix& q = chain.q(t);
  const SquareMatrix& prev = chain.qbar(t - 1);
  const SquareMatrix& cum = chain.qbar(t);
  std::vector<double> out(d, 0.0);
  for (std::size_t x0 = 0; x0 < d; ++x0) {
    const double evidence = cum(x0, xt.index());
    if (evidence == 0.0 || predicted_p0[x0] == 0.0) continue;
    const double w = predicted_p0[x0] / evidence;
    for (std::size_t j = 0; j < d; ++j) {
      const double likelihood = q(j, xt.index());
      if (likelihood > 0.0) out[j] += w * prev(x0, j) * likelihood;
    }
  }
  double total = 0.0;
  for (double v : out) total += v;
  if (!(total > 0.0)) throw ImpossibleEvidence("reverse_distribution: prediction assigns zero mass to every state");
  for (double& v : out) v /= total;
  return out;
}

std::vector<double> final_distribution(const OneHot& x0, std::span<const double> predicted_p0,
                                       const TransitionChain& chain) {
  check_state(x0, chain);
  check_distribution(predicted_p0, chain.dim(), "predicted_p0");
  const SquareMatrix& q = chain.q(0);
  std::vector<double> out(chain.dim(), 0.0);
  double total = 0.0;
  for (std::size_t x = 0; x < chain.dim(); ++x) {
    if (q(x, x0.index()) > 0.0) out[x] = predicted_p0[x];
    total += out[x];
  }
  if (!(total > 0.0)) throw ImpossibleEvidence("final_distribution: prediction assigns zero mass to every state");
  for (double& v : out) v /= total;
  return out;
}

double grouped_cross_entropy(std::span<const std::vector<double>> predictions_a,
                             std::span<const std::vector<double>> predictions_b, const GroupedSample& truth) {
  if (predictions_a.size() != truth.group_a.size() || predictions_b.size() != truth.group_b.size()) {
    throw UsageError("grouped_cross_entropy: prediction and truth counts differ");
  }
  if (!(truth.lambda >= 0.0)) throw UsageError("grouped_cross_entropy: lambda must be non-negative");
  auto group_sum = [](std::span<const std::vector<double>> preds, std::span<const OneHot> xs) {
    double s = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      check_distribution(preds[i], xs[i].dim(), "prediction");
      const double p = preds[i][xs[i].index()];
      if (p == 0.0) return std::numeric_limits<double>::infinity();
      s -= std::log(p);
    }
    return s;
  };
  const double a = group_sum(predictions_a, truth.group_a);
  const double b = truth.group_b.empty() ? 0.0 : group_sum(predictions_b, truth.group_b);
  if (std::isinf(a) || (std::isinf(b) && truth.lambda > 0.0)) return std::numeric_limits<double>::infinity();
  return a + (truth.lambda > 0.0 ? truth.lambda * b : 0.0);
}

std::size_t sample_categorical(std::span<const double> p, Rng& rng) {
  const double u = rng.uniform();
  double cum = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) last_positive = i;
    cum += p[i];
    if (u < cum) return i;
  }
  return last_positive;  // rounding: u landed past the accumulated mass
}

OneHot sample_reverse(const OneHot& terminal, const CategoricalPredictor& predictor, const TransitionChain& chain,
                      Rng& rng) {
  OneHot x = terminal;
  for (int t = chain.steps() - 1; t >= 1; --t) {
    const auto p = reverse_distribution(x, predictor(x, t), chain, t);
    x = OneHot(chain.dim(), sample_categorical(p, rng));
  }
  const auto p = final_distribution(x, predictor(x, 0), chain);
  return OneHot(chain.dim(), sample_categorical(p, rng));
}

std::string chain_csv(const TransitionChain& chain) {
  std::string out = "t,i,j,Q_ij\n";
  for (int t = 0; t < chain.steps(); ++t) {
    for (std::size_t i = 0; i < chain.dim(); ++i) {
      for (std::size_t j = 0; j < chain.dim(); ++j) {
        out += std::to_string(t) + ',' + std::to_string(i) + ',' + std::to_string(j) + ',' +
               io::format_double(chain.q(t)(i, j)) + '\n';
      }
    }
  }
  return out;
}

void dump_chain(const TransitionChain& chain, const std::filesystem::path& path) {
  io::write_file(path, chain_csv(chain));
}

std::string to_string(ChainKind kind) { return kind == ChainKind::Uniform ? "uniform" : "marginal"; }

ChainKind parse_chain_kind(const std::string& name) {
  if (name == "uniform") return ChainKind::Uniform;
  if (name == "marginal") return ChainKind::Marginal;
  throw UsageError("unknown chain kind '" + name + "' (expected uniform|marginal)");
}

void DemoConfig::validate() const {
  if (d < 2 || d > 8) throw UsageError("discrete demo: d must be in [2, 8]");
  if (T < 1 || T > 20) throw UsageError("discrete demo: T must be in [1, 20]");
  if (epochs < 1 || batch_size == 0 || n_samples == 0) throw UsageError("discrete demo: sizes must be positive");
  if (!(learning_rate > 0.0)) throw UsageError("discrete demo: learning rate must be positive");
  if (!(lambda >= 0.0)) throw UsageError("discrete demo: lambda must be non-negative");
  if (data) {
    if (data->empty()) throw UsageError("discrete demo: explicit data is empty");
    for (const auto& [a, b] : *data) {
      if (a >= d || b >= d) throw UsageError("discrete demo: data state out of range");
    }
  } else if (n_train == 0) {
    throw UsageError("discrete demo: n_train must be positive");
  }
  if (betas && betas->size() != static_cast<std::size_t>(T)) {
    throw UsageError("discrete demo: explicit betas must have length T");
  }
}

std::size_t quantize(double v, std::size_t d) {
  const double pos = (v + 7.0) / 14.0 * static_cast<double>(d);
  if (!(pos > 0.0)) return 0;
  return std::min(d - 1, static_cast<std::size_t>(pos));
}

namespace {

using Pair = std::pair<std::size_t, std::size_t>;

std::vector<double> softmax(std::span<const double> logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double s = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    s += p[i];
  }
  for (double& v : p) v /= s;
  return p;
}

// Network input: one-hot of each axis state, then t/T.
void encode(std::size_t d, const Pair& state, int t, int T, std::vector<double>& input) {
  input.assign(2 * d + 1, 0.0);
  input[state.first] = 1.0;
  input[d + state.second] = 1.0;
  input[2 * d] = normalized_time(t, T);
}

std::array<std::vector<double>, 2> heads(const Mlp& mlp, std::size_t d, std::span<const double> input) {
  const auto logits = mlp.forward(input);
  return {softmax(std::span(logits).first(d)), softmax(std::span(logits).subspan(d, d))};
}

std::vector<double> histogram(std::span<const Pair> xs, std::size_t d, bool second) {
  std::vector<double> h(d, 0.0);
  for (const auto& p : xs) h[second ? p.second : p.first] += 1.0;
  for (double& v : h) v /= static_cast<double>(xs.size());
  return h;
}

}  // namespace

DemoMetrics demo_run(const DemoConfig& config) {
  config.validate();
  const std::size_t d = config.d;
  const int T = config.T;

  std::vector<Pair> data;
  if (config.data) {
    data = *config.data;
  } else {
    const Dataset ds = sample(default_target(), config.n_train, Rng::derive(config.seed, 10).next_u64());
    data.reserve(ds.points.size());
    for (const auto& p : ds.points) data.emplace_back(quantize(p.x, d), quantize(p.y, d));
  }

  DemoMetrics metrics;
  metrics.training_marginals = {histogram(data, d, false), histogram(data, d, true)};

  std::vector<double> betas;
  if (config.betas) {
    betas = *config.betas;
  } else {
    const Schedule cosine = Schedule::cosine(T);
    betas.assign(cosine.betas().begin(), cosine.betas().end());
  }
  const std::array<TransitionChain, 2> chains =
      config.chain == ChainKind::Uniform
          ? std::array{make_uniform_chain(d, betas), make_uniform_chain(d, betas)}
          : std::array{make_marginal_chain(d, betas, metrics.training_marginals[0]),
                       make_marginal_chain(d, betas, metrics.training_marginals[1])};
  const std::vector<double> uniform(d, 1.0 / static_cast<double>(d));
  const std::array<std::vector<double>, 2> limits =
      config.chain == ChainKind::Uniform ? std::array{uniform, uniform} : metrics.training_marginals;

  // Training: predict both axes' clean states from the noised pair.
  Mlp mlp = Mlp::init(Rng::derive(config.seed, 11).next_u64(), MlpShape{2 * d + 1, 20, 2 * d});
  AdamState adam(mlp.params().size(), config.learning_rate);
  Rng rng = Rng::derive(config.seed, 12);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> input;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      Gradients grads(mlp.shape());
      double batch_loss = 0.0;
      for (std::size_t i = start; i < end; ++i) {
        const Pair& clean = data[order[i]];
        const int t = static_cast<int>(rng.below(static_cast<std::uint64_t>(T)));
        const Pair noisy{sample_categorical(marginal(OneHot(d, clean.first), chains[0], t), rng),
                         sample_categorical(marginal(OneHot(d, clean.second), chains[1], t), rng)};
        encode(d, noisy, t, T, input);
        const GroupedSample truth{{OneHot(d, clean.first)}, {OneHot(d, clean.second)}, config.lambda};
        backprop(mlp, input,
                 [&](std::span<const double> out, std::span<double> d_out) {
                   const std::vector<double> pa = softmax(out.first(d));
                   const std::vector<double> pb = softmax(out.subspan(d, d));
                   batch_loss += grouped_cross_entropy(std::span(&pa, 1), std::span(&pb, 1), truth);
                   for (std::size_t k = 0; k < d; ++k) {
                     d_out[k] = scale * (pa[k] - (k == clean.first ? 1.0 : 0.0));
                     d_out[d + k] = scale * config.lambda * (pb[k] - (k == clean.second ? 1.0 : 0.0));
                   }
                 },
                 grads.values);
      }
      adam_step(mlp.params(), grads.values, adam);
      epoch_loss += batch_loss * scale;
      ++batches;
    }
    metrics.loss_trace.push_back(epoch_loss / static_cast<double>(batches));
  }
  if (!mlp.finite()) throw NumericError("discrete demo: training diverged");

  // Reverse sampling, one generator stream per sample.
  metrics.samples.reserve(config.n_samples);
  for (std::size_t n = 0; n < config.n_samples; ++n) {
    Rng srng = Rng::derive(config.seed ^ 0x5a5a5a5aULL, n);
    Pair x{sample_categorical(limits[0], srng), sample_categorical(limits[1], srng)};
    for (int t = T - 1; t >= 0; --t) {
      encode(d, x, t, T, input);
      const auto p0 = heads(mlp, d, input);
      const OneHot xa(d, x.first);
      const OneHot xb(d, x.second);
      const auto pa = t > 0 ? reverse_distribution(xa, p0[0], chains[0], t) : final_distribution(xa, p0[0], chains[0]);
      const auto pb = t > 0 ? reverse_distribution(xb, p0[1], chains[1], t) : final_distribution(xb, p0[1], chains[1]);
      x = {sample_categorical(pa, srng), sample_categorical(pb, srng)};
    }
    metrics.samples.push_back(x);
  }

  metrics.generated_marginals = {histogram(metrics.samples, d, false), histogram(metrics.samples, d, true)};
  for (std::size_t axis = 0; axis < 2; ++axis) {
    double tv = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      tv += std::abs(metrics.generated_marginals[axis][k] - metrics.training_marginals[axis][k]);
    }
    metrics.total_variation[axis] = 0.5 * tv;
  }
  metrics.mean_total_variation = 0.5 * (metrics.total_variation[0] + metrics.total_variation[1]);
  return metrics;
}

std::string demo_metrics_json(const DemoConfig& config, const DemoMetrics& metrics) {
  nlohmann::ordered_json j;
  j["config"] = {{"d", config.d},
                 {"T", config.T},
                 {"chain", to_string(config.chain)},
                 {"n_train", config.data ? config.data->size() : config.n_train},
                 {"n_samples", config.n_samples},
                 {"epochs", config.epochs},
                 {"batch_size", config.batch_size},
                 {"learning_rate", config.learning_rate},
                 {"lambda", config.lambda},
                 {"seed", config.seed}};
  j["total_variation"] = {{"axis_x", metrics.total_variation[0]},
                          {"axis_y", metrics.total_variation[1]},
                          {"mean", metrics.mean_total_variation}};
  j["training_marginals"] = metrics.training_marginals;
  j["generated_marginals"] = metrics.generated_marginals;
  j["loss_trace"] = metrics.loss_trace;
  return j.dump(2) + "\n";
}

}  // namespace difflab::discrete
