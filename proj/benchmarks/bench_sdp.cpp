#include <benchmark/benchmark.h>

#include "sampaudit/catalog.hpp"
#include "sampaudit/cheat_sdp.hpp"
#include "sampaudit/sdp_solver.hpp"

namespace la = sampaudit::linalg;

static void BM_UnitTraceSdp(benchmark::State& state) {
  sampaudit::StreamRng rng(5);
  const auto d = static_cast<std::size_t>(state.range(0));
  sampaudit::sdp::Problem prob;
  prob.block_dims = {d};
  prob.objective = {sampaudit::random::hermitian(d, rng)};
  prob.constraints = {{{{0, la::identity(d)}}, 1.0}};
  for (auto _ : state) benchmark::DoNotOptimize(sampaudit::sdp::solve(prob));
}
BENCHMARK(BM_UnitTraceSdp)->Arg(4)->Arg(16)->Arg(32);

static void BM_ForcingOneRound(benchmark::State& state) {
  const auto proto = sampaudit::catalog::one_round_bell();
  for (auto _ : state) benchmark::DoNotOptimize(sampaudit::forcing_probability(proto, sampaudit::Party::bob, 0));
}
BENCHMARK(BM_ForcingOneRound);

static void BM_KitaevRandomProtocol(benchmark::State& state) {
  sampaudit::StreamRng rng(6);
  const auto proto = sampaudit::catalog::random_protocol(rng, {4, 3, 3});
  for (auto _ : state) benchmark::DoNotOptimize(sampaudit::kitaev_check(proto, 1));
}
BENCHMARK(BM_KitaevRandomProtocol)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
