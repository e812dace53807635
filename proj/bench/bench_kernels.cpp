// Serial reference vs OpenMP paths for the two hot loops.

#include <benchmark/benchmark.h>

#include "bld/data.hpp"
#include "bld/model.hpp"
#include "bld/sampler.hpp"

using namespace bld;

namespace {

DenoiserNet make_net(int T) {
  DenoiserNet net({8, 128, 2, T, 0});
  Rng rng(1);
  net.init(rng);
  return net;
}

void BM_BatchGradient(benchmark::State& state) {
  const bool parallel = state.range(0) != 0;
  const auto batch = static_cast<std::size_t>(state.range(1));
  const auto s = build_schedule(ScheduleKind::Linear, 16);
  const auto net = make_net(16);
  Rng rng(2);
  const auto z0 = data::make_codeword_dataset(data::default_codewords(), batch, rng);
  TrainConfig cfg;
  std::int64_t step = 0;
  for (auto _ : state) benchmark::DoNotOptimize(batch_gradient(net, s, z0, {}, cfg, ++step, parallel));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch));
  state.SetLabel(parallel ? "openmp" : "serial");
}

void BM_SampleChain(benchmark::State& state) {
  const int T = 16;
  const auto s = build_schedule(ScheduleKind::Linear, T);
  const auto net = make_net(T);
  SampleRequest req;
  req.parallel = state.range(0) != 0;
  req.num_samples = static_cast<std::size_t>(state.range(1));
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_chain(net, req, s));
    ++req.seed;
  }
  state.SetItemsProcessed(state.iterations() * state.range(1));
  state.SetLabel(req.parallel ? "openmp" : "serial");
}

}  // namespace

BENCHMARK(BM_BatchGradient)->ArgsProduct({{0, 1}, {64, 512}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_SampleChain)->ArgsProduct({{0, 1}, {1000, 10000}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
