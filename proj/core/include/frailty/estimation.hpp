#ifndef FRAILTY_ESTIMATION_HPP
#define FRAILTY_ESTIMATION_HPP

#include "frailty/model.hpp"
#include "frailty/optim.hpp"
#include "frailty/pimh.hpp"
#include "frailty/types.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace frailty {

struct EmConfig {
  int n_paths_per_iter = 50;  // post burn-in paths kept per E-step
  PimhConfig pimh;            // chain settings; k_iterations is derived
  int max_iters = 100;
  double tol = 1e-3;        // |delta objective| threshold ...
  int tol_consecutive = 3;  // ... met this many times in a row
  std::optional<double> fix_sigma;  // pins sigma against the (xi, sigma) scaling
  OptimizerConfig optimizer;
  std::uint64_t seed = 0;
};

/// Point estimates with Hessian-based asymptotic inference, one row per
/// parameter (covariate coefficients, then xi, eta, sigma).
struct ThetaEstimate {
  Theta theta;
  std::vector<std::string> param_names;
  Vec estimates;
  Vec se;
  Vec t_stats;
  Vec ci_lower;  // estimate - 1.96 se
  Vec ci_upper;  // estimate + 1.96 se
  double loglik = 0.0;  // filter estimate of the observed-data log-likelihood
  int iterations = 0;
  std::vector<double> trace;  // per-iteration EM objective
  std::int64_t n_observations = 0;
};

/// Maximum likelihood for the model without the hidden factor (xi = 0),
/// quasi-Newton ascent from kappa = 0.
Vec fit_no_frailty(const FirmPanel& panel, const OptimizerConfig& cfg = {});

/// M-step over gamma = (kappa, xi): maximizes the path-averaged
/// log-posterior with the analytic gradient. Post: objective(return) >=
/// objective(start) and gradient norm <= cfg.grad_tol.
Vec mstep_gamma(const std::vector<FrailtyPath>& paths, const FirmPanel& panel,
                const PriorSpec& prior, Eigen::Ref<const Vec> start,
                const OptimizerConfig& cfg = {});

/// M-step over the OU parameters: pooled AR(1) regression through the origin
/// across the sampled paths, h_{t+1} = a h_t + eps. Returns (eta, sigma).
std::pair<double, double> mstep_ou(const std::vector<FrailtyPath>& paths,
                                   double dt = 1.0);

struct Inference {
  Vec se;
  Vec t_stats;
  Vec ci_lower;
  Vec ci_upper;
};

/// Standard errors from the finite-difference Hessian at a maximum:
/// se = sqrt(diag((-H)^-1)), t = estimate / se, ci95 = estimate +- 1.96 se.
/// Central differences with relative step 1e-4, symmetrized. Throws
/// "not at a maximum" when -H is not positive definite.
Inference asymptotic_inference(const std::function<double(const Vec&)>& objective,
                               Eigen::Ref<const Vec> theta_hat);

/// Particle MCMC EM: alternates PIMH sampling of frailty paths with
/// maximization of the Monte Carlo averaged log-posterior, starting from
/// theta = (kappa_hat, 0.05, 0.01, 1).
ThetaEstimate em_estimate(const FirmPanel& panel, const PriorSpec& prior,
                          const EmConfig& cfg);

}  // namespace frailty

#endif  // FRAILTY_ESTIMATION_HPP
