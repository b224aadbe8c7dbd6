#include <benchmark/benchmark.h>

#include <difflab/discrete.hpp>
#include <difflab/eval.hpp>
#include <difflab/net.hpp>
#include <difflab/sample.hpp>
#include <difflab/schedule.hpp>
#include <difflab/target.hpp>
#include <difflab/train.hpp>

using namespace difflab;

namespace {

std::vector<double> batch_inputs(std::size_t n) {
  Rng rng(1);
  std::vector<double> in;
  for (std::size_t i = 0; i < n; ++i) in.insert(in.end(), {7 * rng.normal(), 7 * rng.normal(), rng.uniform()});
  return in;
}

}  // namespace

static void BM_MlpForward(benchmark::State& state) {
  const Mlp mlp = Mlp::init(0);
  const auto in = batch_inputs(1);
  std::vector<double> out(2);
  for (auto _ : state) {
    mlp.forward(in, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_MlpForward);

static void BM_MseBackward(benchmark::State& state) {
  const Mlp mlp = Mlp::init(0);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto in = batch_inputs(n);
  const std::vector<double> target(2 * n, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(mse_backward(mlp, in, target).loss);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MseBackward)->Arg(64);

static void BM_TrainEpoch(benchmark::State& state) {
  const auto data = sample(default_target(), 10000, 0).points;
  TrainConfig c;
  c.epochs = 1;
  for (auto _ : state) benchmark::DoNotOptimize(train_run(c, data).steps);
}
BENCHMARK(BM_TrainEpoch)->Unit(benchmark::kMillisecond);

static void BM_EnergyDistance(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = sample(default_target(), n, 1).points;
  const auto b = sample(default_target(), n, 2).points;
  for (auto _ : state) benchmark::DoNotOptimize(energy_distance(a, b));
}
BENCHMARK(BM_EnergyDistance)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

static void BM_SamplerStep(benchmark::State& state) {
  const Schedule s = Schedule::cosine(100);
  const Predictor net = network_predictor(Mlp::init(0), 100);
  const auto kind = static_cast<SamplerKind>(state.range(0));
  Vec2 x{0.3, -0.2};
  for (auto _ : state) {
    x = step(kind, net, x, 50, s, {0.1, 0.1});
    benchmark::DoNotOptimize(x);
  }
}
BENCHMARK(BM_SamplerStep)->DenseRange(0, 2);

static void BM_OracleSampler(benchmark::State& state) {
  const Schedule s = Schedule::cosine(100);
  const Predictor oracle = oracle_noise_predictor(default_target(), s);
  const auto particles = init_particles(InitMode::Grid, 1024, 0);
  const std::vector<int> record{0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_sampler(oracle, SamplerKind::Noise, s, particles, record, 0).last().points.data());
  }
  state.SetItemsProcessed(state.iterations() * 1024);
}
BENCHMARK(BM_OracleSampler)->Unit(benchmark::kMillisecond);

static void BM_ReverseDistribution(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const Schedule s = Schedule::cosine(20);
  const auto chain = discrete::make_uniform_chain(d, s);
  const std::vector<double> p0(d, 1.0 / static_cast<double>(d));
  for (auto _ : state) benchmark::DoNotOptimize(discrete::reverse_distribution(discrete::OneHot(d, 1), p0, chain, 10));
}
BENCHMARK(BM_ReverseDistribution)->Arg(8);
BENCHMARK_MAIN();
