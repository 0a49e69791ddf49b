#include <benchmark/benchmark.h>

#include "divlab/accumulation.hpp"
#include "divlab/adversary.hpp"
#include "divlab/channel_div.hpp"
#include "divlab/qobjects.hpp"

using namespace divlab;

static void BM_MinOutputUmegaki(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const QuantumMap a = gad_channel(0.9, 0.0), b = gad_channel(0.9, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(min_output(a, b, {Family::umegaki, 1.0, 0.0}, n));
}
BENCHMARK(BM_MinOutputUmegaki)->DenseRange(1, 2)->Unit(benchmark::kMillisecond);

static void BM_FidelityMinOutput(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const QuantumMap a = random_channel(2, 2, 2, 1), b = random_channel(2, 2, 2, 2);
  for (auto _ : state) benchmark::DoNotOptimize(fidelity_min_output(a, b, n));
}
BENCHMARK(BM_FidelityMinOutput)->DenseRange(1, 2)->Unit(benchmark::kMillisecond);

static void BM_SameInputMeasured(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const QuantumMap a = gad_channel(0.5, 0.0), b = gad_channel(0.7, 0.9);
  for (auto _ : state) benchmark::DoNotOptimize(min_output_same_input(a, b, {Family::measured, 1.0, 0.0}, n));
}
BENCHMARK(BM_SameInputMeasured)->DenseRange(1, 2)->Unit(benchmark::kMillisecond);

static void BM_Rollout(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Dilation d = dilation_of(gad_channel(0.4, 0.2));
  std::vector<std::size_t> mem(n + 1, 2);
  mem.back() = 1;
  const Strategy s = random_strategy({d}, mem, 4, 3);
  for (auto _ : state) benchmark::DoNotOptimize(rollout(d, s));
}
BENCHMARK(BM_Rollout)->DenseRange(1, 3);

static void BM_HmaxWitness(benchmark::State& state) {
  const Matrix rho = random_density(4, 5);
  for (auto _ : state) benchmark::DoNotOptimize(hmax_witness(rho, 0.05, {2, 2}));
}
BENCHMARK(BM_HmaxWitness)->Unit(benchmark::kMillisecond);
