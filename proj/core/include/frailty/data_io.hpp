#ifndef FRAILTY_DATA_IO_HPP
#define FRAILTY_DATA_IO_HPP

#include "frailty/estimation.hpp"
#include "frailty/evaluation.hpp"
#include "frailty/forecast.hpp"
#include "frailty/types.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace frailty {

// --- Panel CSV --------------------------------------------------------------
// Header: firm_id,month,treasury,sp500,d2d,firm_size,roa,leverage,firm_return,default
// One row per firm-month, month as an integer index (months since 1980-01),
// numbers in round-trip precision.

FirmPanel load_panel(const std::filesystem::path& path);
void save_panel(const FirmPanel& panel, const std::filesystem::path& path);

// --- Synthetic panel generation ---------------------------------------------

struct CovariateDynamics {
  Ar1 ar;                 // monthly AR(1)
  double init = 0.0;      // macro: series start value
  double init_mean = 0.0; // firm: cross-sectional initial distribution
  double init_sd = 0.0;
};

struct GeneratorSpec {
  int n_firms = 500;
  int n_months = 120;
  int start_month = 0;
  Theta theta_true;
  std::array<CovariateDynamics, kMacroCount> macro;
  std::vector<CovariateDynamics> firm_covariates;  // size dim - 1 - kMacroCount
  int entry_spread_months = 0;  // staggered entry over [0, spread]
  double initial_frailty = 0.0;  // H at the first month (default: the OU mean)
  std::uint64_t seed = 0;

  void validate() const;
};

struct PanelTruth {
  Theta theta;
  FrailtyPath frailty;
};

/// Simulates macro AR(1) series, firm covariates, the OU frailty path and
/// per-cell default draws with probability 1 - exp(-lambda dt); a default
/// terminates the firm's record. Deterministic given spec.seed.
std::pair<FirmPanel, PanelTruth> generate_synthetic(const GeneratorSpec& spec);

// --- Run configuration --------------------------------------------------------

enum class SpdRepair { none, clip };

struct RunConfig {
  std::uint64_t seed = 0;
  int threads = 0;
  PriorSpec prior;  // resolved: symmetrized, repaired, slot-reordered
  SmcConfig smc;
  PimhConfig pimh;
  EmConfig em;
  ForecastConfig forecast;
  int forecast_tau_max = 36;
  BacktestConfig backtest;
  GeneratorSpec generator;
  std::filesystem::path panel_path;
  std::filesystem::path fit_report_path;  // optional: reuse a saved fit
  std::filesystem::path scores_path;      // optional: cap-plot input
  std::vector<std::string> warnings;
};

/// Parses and validates a JSON run configuration. Gaussian prior blocks are
/// symmetrized (with a warning when the input disagrees across the diagonal),
/// optionally eigenvalue-clipped to the nearest SPD matrix per the
/// "spd_repair" policy, reordered from the printed slot order into the model
/// order, and rejected if not positive definite. With check_files, referenced
/// input files must exist.
RunConfig load_config(const std::filesystem::path& path, bool check_files = true);

// --- Report formats -----------------------------------------------------------

/// Machine-readable fit report (CSV with footer rows); parse_fit_report
/// reads it back.
void save_fit_report(const ThetaEstimate& est, const std::filesystem::path& path);

struct FitReport {
  std::vector<std::string> param_names;
  Vec estimates, se, t_stats, ci_lower, ci_upper;
  std::int64_t n_observations = 0;
  double loglik = 0.0;

  Theta to_theta() const;
};

FitReport parse_fit_report(const std::filesystem::path& path);

/// Human-readable fit table with the usual predictor labels and the
/// observation-count / log-likelihood footer.
void save_fit_table(const ThetaEstimate& est, const std::filesystem::path& path);

void save_backtest_report(const BacktestReport& report,
                          const std::filesystem::path& path);
/// Triangular cohort-year table, one block per model, ARs in percent.
void save_backtest_table(const BacktestReport& report,
                         const std::filesystem::path& path);

void save_pd_table(const std::vector<PdTermStructure>& terms,
                   const std::filesystem::path& path);

void save_cap_curve(const std::vector<std::pair<double, double>>& curve,
                    const std::filesystem::path& path);

void save_truth(const PanelTruth& truth, const std::filesystem::path& path);

/// Scores CSV (firm_id,score,label) consumed by the cap-plot command.
ScoredCohort load_scores(const std::filesystem::path& path);

}  // namespace frailty

#endif  // FRAILTY_DATA_IO_HPP
