#ifndef FRAILTY_EVALUATION_HPP
#define FRAILTY_EVALUATION_HPP

#include "frailty/estimation.hpp"
#include "frailty/forecast.hpp"
#include "frailty/types.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace frailty {

struct ScoredEntry {
  std::string firm_id;
  double score = 0.0;  // predicted default probability (any monotone score)
  int label = 0;       // defaulted within the horizon
};

struct ScoredCohort {
  std::vector<ScoredEntry> entries;
  int horizon_months = 0;
  int cohort_year = 0;

  double default_rate() const;
};

/// Cumulative accuracy profile: firms sorted by score descending, tie groups
/// traversed as one linear segment. Returns the vertices from (0,0) to (1,1).
std::vector<std::pair<double, double>> cap_curve(const ScoredCohort& cohort);

/// AR = area between the CAP and the diagonal over the perfect model's area
/// (1 - default_rate) / 2. Throws "AR undefined" when default_rate is 0 or 1.
double accuracy_ratio(const std::vector<std::pair<double, double>>& curve,
                      double default_rate);

/// Same ratio evaluated from the cohort's tie-group counts; the integer
/// cross-multiplication form is exact, so a perfect ranking gives 1.0 and a
/// constant one 0.0 bit-for-bit.
double accuracy_ratio(const ScoredCohort& cohort);

/// Firm-month logistic regression of the default indicator on the covariate
/// vector, fitted by iteratively reweighted least squares.
struct LogisticModel {
  Vec beta;
  Vec se;
  int iterations = 0;

  double monthly_pd(Eigen::Ref<const Vec> z) const;
};

LogisticModel fit_logistic(const FirmPanel& train);

/// A cohort member: firm state at cohort start plus the realized label
/// (default within the horizon; censored exits count as non-default).
struct CohortMember {
  std::string firm_id;
  Vec state;
  int label = 0;
};

/// Evaluation-cohort membership: firms under observation at cohort_start.
std::vector<CohortMember> build_cohort(const FirmPanel& panel, int cohort_start,
                                       int horizon_months);

struct LogisticBaselineResult {
  ScoredCohort cohort;
  Vec coefficients;
};

/// Scores a cohort with per-month probabilities compounded over the horizon:
/// score = 1 - (1 - p(z))^horizon with z frozen at cohort start.
LogisticBaselineResult logistic_baseline(const FirmPanel& train,
                                         const std::vector<CohortMember>& cohort,
                                         int horizon_months, int cohort_year);

struct BacktestModelSpec {
  std::string name;
  PriorSpec prior;
};

struct BacktestConfig {
  int train_start_year = 0;
  int train_end_year = 0;
  int eval_start_year = 0;
  int eval_end_year = 0;
  std::vector<int> horizons_years = {1, 2, 3};
  std::vector<BacktestModelSpec> models;
  bool include_logistic = true;
  EmConfig em;
  ForecastConfig forecast;
  std::uint64_t seed = 0;
};

struct BacktestCell {
  int report_year = 0;
  std::optional<double> ar;  // empty when the cohort has a single class
  int n_firms = 0;
  int n_defaults = 0;
};

struct BacktestRow {
  std::string model;
  int horizon_years = 0;
  std::vector<BacktestCell> cells;
  std::optional<double> average;  // over defined cells
  int n_undefined = 0;
  std::vector<ScoredCohort> cohorts;  // one per cell, for CAP emission
};

struct BacktestReport {
  std::vector<BacktestRow> rows;
};

/// Cohort-style out-of-sample backtest: firms split into two equal groups by
/// a stable hash of firm_id, models estimated on the first group over the
/// training years, cohorts drawn from the second group. The report year Y at
/// horizon tau covers predictions made at the start of year Y - tau + 1 and
/// labelled over the following 12 tau months, which yields the triangular
/// cohort layout.
BacktestReport backtest(const FirmPanel& panel, const BacktestConfig& cfg);

/// The deterministic estimation/evaluation firm split used by backtest.
std::pair<std::vector<std::string>, std::vector<std::string>> split_firms(
    const FirmPanel& panel);

}  // namespace frailty

#endif  // FRAILTY_EVALUATION_HPP
