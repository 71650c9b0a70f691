#include <benchmark/benchmark.h>

#include "sampaudit/linalg.hpp"
#include "sampaudit/random.hpp"

namespace la = sampaudit::linalg;

static void BM_Tensor(benchmark::State& state) {
  sampaudit::StreamRng rng(1);
  const auto d = static_cast<std::size_t>(state.range(0));
  const la::CMatrix x = sampaudit::random::hermitian(d, rng), y = sampaudit::random::hermitian(d, rng);
  for (auto _ : state) benchmark::DoNotOptimize(la::tensor(x, y));
}
BENCHMARK(BM_Tensor)->Arg(4)->Arg(8)->Arg(16);

static void BM_PartialTrace(benchmark::State& state) {
  sampaudit::StreamRng rng(2);
  const auto d = static_cast<std::size_t>(state.range(0));
  const la::RegisterLayout layout({{"A", d}, {"M", d}, {"B", d}});
  const la::CMatrix x = sampaudit::random::density_matrix(d * d * d, rng);
  for (auto _ : state) benchmark::DoNotOptimize(la::partial_trace(x, layout, {"A", "B"}));
}
BENCHMARK(BM_PartialTrace)->Arg(2)->Arg(3)->Arg(4);

static void BM_HermEig(benchmark::State& state) {
  sampaudit::StreamRng rng(3);
  const la::CMatrix h = sampaudit::random::hermitian(static_cast<std::size_t>(state.range(0)), rng);
  for (auto _ : state) benchmark::DoNotOptimize(la::herm_eig(h));
}
BENCHMARK(BM_HermEig)->Arg(8)->Arg(32)->Arg(64);

static void BM_TraceDistance(benchmark::State& state) {
  sampaudit::StreamRng rng(4);
  const auto d = static_cast<std::size_t>(state.range(0));
  const la::CMatrix r = sampaudit::random::density_matrix(d, rng), s = sampaudit::random::density_matrix(d, rng);
  for (auto _ : state) benchmark::DoNotOptimize(la::trace_distance(r, s));
}
BENCHMARK(BM_TraceDistance)->Arg(4)->Arg(16);

BENCHMARK_MAIN();
