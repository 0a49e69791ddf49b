#include <benchmark/benchmark.h>

#include "divlab/divergences.hpp"
#include "divlab/linalg.hpp"

using namespace divlab;

static void BM_HermEig(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const Matrix h = random_hermitian(d, 1);
  for (auto _ : state) benchmark::DoNotOptimize(herm_eig(h));
}
BENCHMARK(BM_HermEig)->RangeMultiplier(2)->Range(2, 64);

static void BM_Umegaki(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const Matrix rho = random_density(d, 1), sigma = random_density(d, 2);
  for (auto _ : state) benchmark::DoNotOptimize(umegaki(rho, sigma));
}
BENCHMARK(BM_Umegaki)->RangeMultiplier(2)->Range(2, 32);

static void BM_Sandwiched(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const Matrix rho = random_density(d, 1), sigma = random_density(d, 2);
  for (auto _ : state) benchmark::DoNotOptimize(sandwiched(rho, sigma, 0.7));
}
BENCHMARK(BM_Sandwiched)->RangeMultiplier(2)->Range(2, 32);

static void BM_HypothesisTesting(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const Matrix rho = random_density(d, 1), sigma = random_density(d, 2);
  for (auto _ : state) benchmark::DoNotOptimize(hypothesis_testing(rho, sigma, 0.1));
}
BENCHMARK(BM_HypothesisTesting)->RangeMultiplier(2)->Range(2, 32);

static void BM_MeasuredRelative(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const Matrix rho = random_density(d, 1), sigma = random_density(d, 2);
  for (auto _ : state) benchmark::DoNotOptimize(measured_relative(rho, sigma));
}
BENCHMARK(BM_MeasuredRelative)->RangeMultiplier(2)->Range(2, 8)->Unit(benchmark::kMillisecond);
