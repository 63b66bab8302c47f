#include <benchmark/benchmark.h>

#include <vector>

#include "projlm/engine.hpp"
#include "projlm/oracle.hpp"
#include "projlm/solvability.hpp"

using namespace projlm;

namespace {

EquationSpec relu_arfima() {
  EquationSpec e;
  e.kernel = Kernel::relu();
  e.alpha = Sequence::arfima(0.4);
  e.beta = BetaScheme::sum_form(Sequence::geometric(0.9, 0.4595));
  return e;
}

void BM_SimulatePath(benchmark::State& state) {
  const EquationSpec e = relu_arfima();
  const InnovationStream stream(1);
  const auto M = static_cast<std::size_t>(state.range(0));
  const std::size_t n = 2000;
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate_path(e, n, M, stream, 0));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}
BENCHMARK(BM_SimulatePath)->Arg(100)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_CoefficientSlice(benchmark::State& state) {
  const EquationSpec e = relu_arfima();
  std::vector<double> w(static_cast<std::size_t>(state.range(0)) + 1, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(coefficient_slice(e, w));
}
BENCHMARK(BM_CoefficientSlice)->Arg(100)->Arg(1000);

void BM_LinearMovingAverage(benchmark::State& state) {
  const auto b = arfima_weights(0.4, static_cast<std::size_t>(state.range(0)) + 1);
  const InnovationStream stream(2);
  for (auto _ : state) benchmark::DoNotOptimize(linear_moving_average(0.0, b, 2000, stream, 0));
}
BENCHMARK(BM_LinearMovingAverage)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_ComputeKq(benchmark::State& state) {
  const EquationSpec e = relu_arfima();
  for (auto _ : state) benchmark::DoNotOptimize(compute_kq(e));
}
BENCHMARK(BM_ComputeKq)->Unit(benchmark::kMillisecond);

void BM_OracleCompare(benchmark::State& state) {
  const auto W = static_cast<std::size_t>(state.range(0));
  const EquationSpec e = random_family_i_spec(7, W);
  const InnovationStream stream(3);
  for (auto _ : state) benchmark::DoNotOptimize(oracle_compare(e, W, 1, stream));
}
BENCHMARK(BM_OracleCompare)->DenseRange(4, 12, 4);

}  // namespace

BENCHMARK_MAIN();
