#include "frailty/model.hpp"

#include "support/fixtures.hpp"

#include <benchmark/benchmark.h>

using namespace frailty;
using namespace frailty::testing;

namespace {

void BM_CompleteDataLoglik(benchmark::State& state) {
  const int n_firms = static_cast<int>(state.range(0));
  const FirmPanel panel = random_panel(n_firms, 120, 1, 0.02);
  const Theta theta = random_theta(kCovariateDim, 2);
  const FrailtyPath path = random_path(panel, 3);
  for (auto _ : state)
    benchmark::DoNotOptimize(complete_data_loglik(panel, path, theta));
  state.SetItemsProcessed(state.iterations() * panel.n_cells());
}
BENCHMARK(BM_CompleteDataLoglik)->Arg(100)->Arg(500);

void BM_MonthStats(benchmark::State& state) {
  const int n_firms = static_cast<int>(state.range(0));
  const FirmPanel panel = random_panel(n_firms, 120, 1, 0.02);
  const Theta theta = random_theta(kCovariateDim, 2);
  for (auto _ : state) benchmark::DoNotOptimize(month_stats(panel, theta.kappa));
  state.SetItemsProcessed(state.iterations() * panel.n_cells());
}
BENCHMARK(BM_MonthStats)->Arg(100)->Arg(500);

void BM_GradLogPosterior(benchmark::State& state) {
  const FirmPanel panel = random_panel(200, 120, 1, 0.02);
  const Theta theta = random_theta(kCovariateDim, 2);
  const FrailtyPath path = random_path(panel, 3);
  const auto prior = PriorSpec::Gaussian(
      Vec::Zero(kCovariateDim + 1), Mat::Identity(kCovariateDim + 1, kCovariateDim + 1));
  for (auto _ : state)
    benchmark::DoNotOptimize(grad_log_posterior_gamma(panel, path, theta, prior));
}
BENCHMARK(BM_GradLogPosterior);

}  // namespace
