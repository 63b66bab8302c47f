#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "projlm/diagnostics.hpp"

using namespace projlm;

namespace {

std::vector<std::vector<double>> noise(std::size_t replicates, std::size_t n) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> nd;
  std::vector<std::vector<double>> out(replicates, std::vector<double>(n));
  for (auto& p : out) {
    for (double& x : p) x = nd(rng);
  }
  return out;
}

void BM_SampleAcf(benchmark::State& state) {
  const auto paths = noise(4, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(sample_acf(PathSet(paths), 1000));
}
BENCHMARK(BM_SampleAcf)->Arg(20000)->Unit(benchmark::kMillisecond);

void BM_PartialSumScaling(benchmark::State& state) {
  const auto paths = noise(4, 20000);
  for (auto _ : state) benchmark::DoNotOptimize(partial_sum_scaling(PathSet(paths)));
}
BENCHMARK(BM_PartialSumScaling)->Unit(benchmark::kMillisecond);

}  // namespace
