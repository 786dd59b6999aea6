// Command-line front end: simulate synthetic panels, estimate the frailty
// default model, forecast default-probability term structures, run cohort
// backtests and emit CAP curve data.

#include "frailty/data_io.hpp"
#include "frailty/parallel.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace frailty;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  bool verbose = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "Run configuration (JSON)")
      ->required();
  cmd->add_option("--out", args.out_dir, "Output directory")->required();
  auto* seed = cmd->add_option("--seed", "Seed override (beats the config value)");
  seed->each([&args](const std::string& v) { args.seed = std::stoull(v); });
  cmd->add_option("--threads", args.threads, "Worker cap (0 = hardware)");
  cmd->add_flag("-v,--verbose", args.verbose, "Progress output on stderr");
}

// Seed precedence: CLI flag > config file > default. The nested component
// seeds were derived from the config seed at load time, so an override has to
// be pushed back down.
void reseed(RunConfig& cfg, std::uint64_t seed) {
  cfg.seed = seed;
  cfg.smc.seed = seed;
  cfg.pimh.seed = seed;
  cfg.pimh.smc.seed = seed;
  cfg.em.seed = seed;
  cfg.em.pimh.seed = seed;
  cfg.em.pimh.smc.seed = seed;
  cfg.backtest.seed = seed;
  cfg.backtest.em = cfg.em;
  cfg.generator.seed = seed;
}

RunConfig load(const CommonArgs& args, bool check_files) {
  RunConfig cfg = load_config(args.config_path, check_files);
  if (args.seed) reseed(cfg, *args.seed);
  if (args.threads > 0)
    set_max_threads(args.threads);
  else if (cfg.threads > 0)
    set_max_threads(cfg.threads);
  for (const auto& w : cfg.warnings) std::cerr << "warning: " << w << '\n';
  return cfg;
}

fs::path ensure_out_dir(const CommonArgs& args) {
  fs::path dir(args.out_dir);
  fs::create_directories(dir);
  return dir;
}

FirmPanel load_input_panel(const RunConfig& cfg) {
  if (cfg.panel_path.empty())
    throw Error("no panel input configured (set paths.panel in the config)");
  return load_panel(cfg.panel_path);
}

int cmd_simulate(const CommonArgs& args) {
  RunConfig cfg = load(args, /*check_files=*/false);
  const fs::path out = ensure_out_dir(args);
  if (args.verbose)
    std::cerr << fmt::format("simulating {} firms x {} months (seed {})\n",
                             cfg.generator.n_firms, cfg.generator.n_months,
                             cfg.generator.seed);
  const auto [panel, truth] = generate_synthetic(cfg.generator);
  save_panel(panel, out / "panel.csv");
  save_truth(truth, out / "truth.json");
  if (args.verbose)
    std::cerr << fmt::format("wrote {} firm-month rows ({} defaults)\n", panel.n_cells(),
                             panel.n_defaults());
  return 0;
}

int cmd_estimate(const CommonArgs& args) {
  RunConfig cfg = load(args, /*check_files=*/true);
  const fs::path out = ensure_out_dir(args);
  const FirmPanel panel = load_input_panel(cfg);
  if (args.verbose)
    std::cerr << fmt::format("estimating on {} firms, {} cells, {} defaults\n",
                             panel.n_firms(), panel.n_cells(), panel.n_defaults());
  const ThetaEstimate est = em_estimate(panel, cfg.prior, cfg.em);
  save_fit_report(est, out / "fit_report.csv");
  save_fit_table(est, out / "fit_report.txt");
  if (args.verbose)
    std::cerr << fmt::format("converged after {} iterations, log-likelihood {:.2f}\n",
                             est.iterations, est.loglik);
  return 0;
}

int cmd_forecast(const CommonArgs& args) {
  RunConfig cfg = load(args, /*check_files=*/true);
  const fs::path out = ensure_out_dir(args);
  const FirmPanel panel = load_input_panel(cfg);

  Theta theta;
  if (!cfg.fit_report_path.empty()) {
    theta = parse_fit_report(cfg.fit_report_path).to_theta();
    if (args.verbose)
      std::cerr << fmt::format("using saved fit '{}'\n", cfg.fit_report_path.string());
  } else {
    if (args.verbose) std::cerr << "no saved fit configured; estimating first\n";
    theta = em_estimate(panel, cfg.prior, cfg.em).theta;
  }

  const CovariateForecastModel covmodel =
      fit_covariate_model(panel, panel.first_month, panel.last_month);

  PimhConfig pimh = cfg.pimh;
  pimh.seed = derive_seed(cfg.seed, fnv1a64("forecast-frailty"));
  const PimhChain chain = run_pimh(panel, theta, pimh);
  const auto paths = chain.kept_paths();
  Vec terminal(paths.size());
  for (std::size_t i = 0; i < paths.size(); ++i)
    terminal(i) = paths[i].h(paths[i].n_months() - 1);

  const int tau = cfg.forecast_tau_max;
  const OuParams ou{theta.eta, theta.sigma, 1.0};
  const Mat frailty_draws = forecast_frailty(terminal, ou, tau, cfg.forecast.n_draws,
                                             derive_seed(cfg.seed, fnv1a64("frailty")));

  std::vector<const FirmRecord*> alive;
  for (const auto& firm : panel.firms)
    if (firm.covers(panel.last_month) && !firm.defaulted()) alive.push_back(&firm);
  if (args.verbose)
    std::cerr << fmt::format("forecasting {} alive firms over {} months\n", alive.size(),
                             tau);

  std::vector<PdTermStructure> terms(alive.size());
  parallel_for(static_cast<std::int64_t>(alive.size()), [&](std::int64_t i) {
    terms[i] = default_probability(alive[i]->firm_id, alive[i]->row(panel.last_month),
                                   covmodel, frailty_draws, theta, tau, cfg.forecast,
                                   derive_seed(cfg.seed, fnv1a64("pd")));
  });
  save_pd_table(terms, out / "pd_terms.csv");
  return 0;
}

int cmd_backtest(const CommonArgs& args) {
  RunConfig cfg = load(args, /*check_files=*/true);
  const fs::path out = ensure_out_dir(args);
  const FirmPanel panel = load_input_panel(cfg);
  if (cfg.backtest.models.empty() && !cfg.backtest.include_logistic)
    throw Error("backtest: no models configured");
  if (args.verbose)
    std::cerr << fmt::format("backtesting years {}..{} (train {}..{})\n",
                             cfg.backtest.eval_start_year, cfg.backtest.eval_end_year,
                             cfg.backtest.train_start_year, cfg.backtest.train_end_year);
  const BacktestReport report = backtest(panel, cfg.backtest);
  save_backtest_report(report, out / "backtest_report.csv");
  save_backtest_table(report, out / "backtest_table.txt");
  for (const auto& row : report.rows)
    for (std::size_t c = 0; c < row.cohorts.size(); ++c) {
      const auto& cohort = row.cohorts[c];
      if (cohort.entries.empty()) continue;
      save_cap_curve(cap_curve(cohort),
                     out / fmt::format("cap_{}_h{}y_{}.csv", row.model,
                                       row.horizon_years, cohort.cohort_year));
    }
  return 0;
}

int cmd_cap_plot(const CommonArgs& args) {
  RunConfig cfg = load(args, /*check_files=*/true);
  const fs::path out = ensure_out_dir(args);
  if (cfg.scores_path.empty())
    throw Error("cap-plot: no scores input configured (set paths.scores in the config)");
  const ScoredCohort cohort = load_scores(cfg.scores_path);
  save_cap_curve(cap_curve(cohort), out / "cap_curve.csv");
  const double rate = cohort.default_rate();
  if (rate > 0.0 && rate < 1.0)
    std::cout << fmt::format("accuracy_ratio {:.6f}\n", accuracy_ratio(cohort));
  else
    std::cout << "accuracy_ratio undefined (single-class cohort)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Frailty-correlated corporate default modeling"};
  app.require_subcommand(1);

  CommonArgs args;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic panel");
  auto* estimate = app.add_subcommand("estimate", "Fit the model, write the fit report");
  auto* forecast = app.add_subcommand("forecast", "Per-firm PD term structures");
  auto* backtest = app.add_subcommand("backtest", "Cohort backtest with CAP/AR report");
  auto* capplot = app.add_subcommand("cap-plot", "CAP curve points from a scores file");
  for (auto* cmd : {simulate, estimate, forecast, backtest, capplot})
    add_common(cmd, args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) return cmd_simulate(args);
    if (estimate->parsed()) return cmd_estimate(args);
    if (forecast->parsed()) return cmd_forecast(args);
    if (backtest->parsed()) return cmd_backtest(args);
    if (capplot->parsed()) return cmd_cap_plot(args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
