#ifndef FRAILTY_MODEL_HPP
#define FRAILTY_MODEL_HPP

#include "frailty/types.hpp"

#include <vector>

namespace frailty {

/// Proportional-hazards default intensity exp(kappa . z + xi h).
/// Throws "intensity overflow" when the exponent exceeds the exp() range.
double intensity(Eigen::Ref<const Vec> z, double h, const Theta& theta);

/// Per-period log-density of one firm-month cell:
/// log(lambda dt) - lambda dt when defaulted, else -lambda dt.
double period_loglik(double lambda, double dt, bool defaulted);

/// Complete-data log-likelihood of the panel given a frailty path:
/// -sum_it lambda_it dt + sum_it log(D_it lambda_it dt + (1 - D_it)).
double complete_data_loglik(const FirmPanel& panel, const FrailtyPath& path,
                            const Theta& theta, double dt = 1.0);

/// Log prior density of gamma = (kappa, xi). Uniform -> 0 exactly;
/// Gaussian -> -1/2 (g-mu)' Sigma^-1 (g-mu) - 1/2 log((2 pi)^n |Sigma|).
double log_prior(Eigen::Ref<const Vec> gamma, const PriorSpec& prior);

/// complete_data_loglik + log_prior on gamma = (kappa, xi).
double log_posterior(const FirmPanel& panel, const FrailtyPath& path,
                     const Theta& theta, const PriorSpec& prior, double dt = 1.0);

/// Analytic gradient of log_posterior with respect to gamma = (kappa, xi):
/// d/dkappa_j = sum_it (D_it - lambda_it dt) z_j, d/dxi with h_t in place of
/// z_j, plus -Sigma^-1 (gamma - mu) under a Gaussian prior.
Vec grad_log_posterior_gamma(const FirmPanel& panel, const FrailtyPath& path,
                             const Theta& theta, const PriorSpec& prior,
                             double dt = 1.0);

inline Vec make_gamma(Eigen::Ref<const Vec> kappa, double xi) {
  Vec g(kappa.size() + 1);
  g << kappa, xi;
  return g;
}

// --- Per-month sufficient statistics ---------------------------------------
//
// With lambda_it = exp(kappa . z_it) * exp(xi h_t), the month-t observation
// log-density across active firms collapses to
//   log g_t(h) = -dt e^{xi h} S_t + d_t (xi h + log dt) + C_t,
// where S_t = sum_i e^{kappa . z_it}, d_t = #defaults at t and
// C_t = sum_{defaults} kappa . z_it. The filter and the M-step only touch
// these per-month aggregates, never the raw cells.

struct MonthStats {
  double sum_exp = 0.0;     // S_t
  double def_linear = 0.0;  // C_t
  int n_defaults = 0;       // d_t
};

struct PanelMonthStats {
  int first_month = 0;
  std::vector<MonthStats> months;
  bool overflow = false;      // some cell exponent left the exp() range
  double max_exponent = 0.0;  // largest cell exponent seen

  const MonthStats& at(int month) const { return months[month - first_month]; }
};

PanelMonthStats month_stats(const FirmPanel& panel, Eigen::Ref<const Vec> kappa);

/// log g_t(h) from the month aggregates (see above).
double obs_logdensity(const MonthStats& ms, double xi, double h, double dt = 1.0);

/// Observed-data log-likelihood when xi = 0 (frailty decoupled); used as the
/// exact reference for the filter in that regime.
double no_frailty_loglik(const FirmPanel& panel, Eigen::Ref<const Vec> kappa,
                         double dt = 1.0);

}  // namespace frailty

#endif  // FRAILTY_MODEL_HPP
