#ifndef FRAILTY_FORECAST_HPP
#define FRAILTY_FORECAST_HPP

#include "frailty/ou.hpp"
#include "frailty/rng.hpp"
#include "frailty/types.hpp"

#include <cstdint>
#include <string>

namespace frailty {

struct Ar1 {
  double intercept = 0.0;
  double phi = 0.0;
  double innovation_sd = 0.0;

  double step(double x, double eps) const {
    return intercept + phi * x + innovation_sd * eps;
  }
};

/// Per-covariate AR(1) forecasting models: one per macro covariate fitted on
/// the shared series, one per firm covariate pooled cross-sectionally.
struct CovariateForecastModel {
  std::vector<Ar1> macro;  // size kMacroCount
  std::vector<Ar1> firm;   // size dim - 1 - kMacroCount
};

/// Least-squares AR(1) fits on the training window [t0, t1]. Macro
/// covariates must come back stationary (|phi| < 1); a zero-variance
/// regressor is an error naming the covariate.
CovariateForecastModel fit_covariate_model(const FirmPanel& panel, int t0, int t1);

/// Future frailty paths: each draw starts from a uniformly chosen terminal
/// sample and propagates tau steps under the OU law. Returns n_draws rows and
/// tau + 1 columns (column 0 is the chosen start); tau = 0 returns the
/// terminal samples unchanged, one row each.
Mat forecast_frailty(Eigen::Ref<const Vec> terminal_samples, const OuParams& ou,
                     int tau, int n_draws, std::uint64_t seed);

/// Cumulative default probabilities p(tau) and survival q(tau) = 1 - p(tau)
/// for horizons 1..tau_max months.
struct PdTermStructure {
  std::string firm_id;
  Vec pd;        // index tau - 1
  Vec survival;  // 1 - pd, exact complement
};

struct ForecastConfig {
  int n_draws = 200;
  bool stochastic_covariates = true;  // false: deterministic point forecasts
};

/// Monte Carlo term structure per Eq.-(3.2)-style hazard compounding:
/// pd(tau) = E[1 - exp(-sum_{u=1..tau} lambda_u dt)] over joint covariate and
/// frailty draws. The month-u hazard uses the state at u-1, so frailty_draws
/// must provide at least tau columns (column 0 = frailty at the forecast
/// origin). Covariate streams are keyed by (seed, firm_id, draw).
PdTermStructure default_probability(const std::string& firm_id,
                                    Eigen::Ref<const Vec> firm_state,
                                    const CovariateForecastModel& model,
                                    const Mat& frailty_draws, const Theta& theta,
                                    int tau, const ForecastConfig& cfg,
                                    std::uint64_t seed);

}  // namespace frailty

#endif  // FRAILTY_FORECAST_HPP
