#include <benchmark/benchmark.h>

#include "sampaudit/catalog.hpp"
#include "sampaudit/cutchoose_sim.hpp"

namespace sim = sampaudit::sim;

static sim::SimConfig config(std::size_t trials) {
  sim::SimConfig cfg;
  cfg.target = sampaudit::catalog::chsh();
  cfg.trials = trials;
  cfg.seed = 1;
  cfg.tau = 1.2;
  return cfg;
}

static void BM_HonestTrials(benchmark::State& state) {
  auto cfg = config(static_cast<std::size_t>(state.range(0)));
  cfg.threads = 1;
  for (auto _ : state) benchmark::DoNotOptimize(sim::run_honest(cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_HonestTrials)->Arg(500)->Unit(benchmark::kMillisecond);

static void BM_FinalBoxSwapTrials(benchmark::State& state) {
  auto cfg = config(static_cast<std::size_t>(state.range(0)));
  cfg.threads = 1;
  const sim::FinalBoxSwapAdversary adv;
  for (auto _ : state) benchmark::DoNotOptimize(sim::run_adversarial(cfg, adv));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FinalBoxSwapTrials)->Arg(500)->Unit(benchmark::kMillisecond);

static void BM_CalibrateTau(benchmark::State& state) {
  auto cfg = config(1);
  cfg.tau.reset();
  cfg.calibration_trials = 2000;
  for (auto _ : state) benchmark::DoNotOptimize(sim::calibrate_tau(cfg));
}
BENCHMARK(BM_CalibrateTau)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
