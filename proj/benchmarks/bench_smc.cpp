#include "frailty/pimh.hpp"
#include "frailty/smc.hpp"

#include "support/fixtures.hpp"

#include <benchmark/benchmark.h>

using namespace frailty;
using namespace frailty::testing;

namespace {

void BM_RunSmc(benchmark::State& state) {
  const FirmPanel panel = random_panel(500, 120, 1, 0.015);
  Theta theta = random_theta(kCovariateDim, 2);
  SmcConfig cfg;
  cfg.n_particles = static_cast<int>(state.range(0));
  cfg.seed = 7;
  for (auto _ : state) benchmark::DoNotOptimize(run_smc(panel, theta, cfg));
  state.SetItemsProcessed(state.iterations() * cfg.n_particles * panel.n_months());
}
BENCHMARK(BM_RunSmc)->Arg(128)->Arg(512)->Arg(2048)->Unit(benchmark::kMillisecond);

void BM_RunSmcSystematic(benchmark::State& state) {
  const FirmPanel panel = random_panel(500, 120, 1, 0.015);
  Theta theta = random_theta(kCovariateDim, 2);
  SmcConfig cfg;
  cfg.n_particles = 512;
  cfg.resampling = Resampling::systematic;
  cfg.seed = 7;
  for (auto _ : state) benchmark::DoNotOptimize(run_smc(panel, theta, cfg));
}
BENCHMARK(BM_RunSmcSystematic)->Unit(benchmark::kMillisecond);

void BM_Pimh(benchmark::State& state) {
  const FirmPanel panel = random_panel(200, 60, 1, 0.02);
  Theta theta = random_theta(kCovariateDim, 2);
  PimhConfig cfg;
  cfg.k_iterations = 50;
  cfg.smc.n_particles = 256;
  cfg.seed = 11;
  for (auto _ : state) benchmark::DoNotOptimize(run_pimh(panel, theta, cfg));
  state.SetItemsProcessed(state.iterations() * (cfg.k_iterations + 1));
}
BENCHMARK(BM_Pimh)->Unit(benchmark::kMillisecond);

}  // namespace
