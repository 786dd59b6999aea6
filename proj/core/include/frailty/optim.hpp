#ifndef FRAILTY_OPTIM_HPP
#define FRAILTY_OPTIM_HPP

#include "frailty/types.hpp"

#include <functional>
#include <vector>

namespace frailty {

struct OptimizerConfig {
  int max_evals = 500;
  double grad_tol = 1e-6;  // on the sup norm of the gradient
};

struct OptimResult {
  Vec x;
  double value = 0.0;
  double grad_norm = 0.0;
  int n_evals = 0;
  bool converged = false;
  std::vector<double> trace;  // objective after each accepted step
};

/// Objective callback: returns f(x) and fills grad with the gradient.
/// A return of -inf marks x as infeasible (line search backtracks).
using GradObjective = std::function<double(const Vec& x, Vec& grad)>;

/// BFGS ascent with backtracking line search. The returned result reports
/// converged = false when the gradient tolerance was not met within the
/// evaluation budget or the line search stalled; callers decide whether that
/// is an error.
OptimResult maximize_bfgs(const GradObjective& f, Vec x0, const OptimizerConfig& cfg);

}  // namespace frailty

#endif  // FRAILTY_OPTIM_HPP
