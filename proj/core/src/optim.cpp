#include "frailty/optim.hpp"

#include <cmath>
#include <limits>

namespace frailty {

OptimResult maximize_bfgs(const GradObjective& f, Vec x0, const OptimizerConfig& cfg) {
  const int n = static_cast<int>(x0.size());
  constexpr double kArmijo = 1e-4;

  OptimResult res;
  res.x = std::move(x0);

  Vec grad(n), grad_new(n);
  double value = f(res.x, grad);
  res.n_evals = 1;
  res.trace.push_back(value);
  if (!std::isfinite(value)) return res;  // infeasible start

  Mat hinv = Mat::Identity(n, n);  // approximate inverse of -Hessian
  bool reset_since_fail = false;

  while (res.n_evals < cfg.max_evals) {
    res.grad_norm = grad.lpNorm<Eigen::Infinity>();
    if (res.grad_norm <= cfg.grad_tol) {
      res.converged = true;
      break;
    }

    Vec dir = hinv * grad;
    double slope = grad.dot(dir);
    if (!(slope > 0.0)) {  // not an ascent direction: restart from identity
      hinv.setIdentity();
      dir = grad;
      slope = grad.squaredNorm();
    }

    // Backtracking Armijo line search. The sufficient-decrease test carries a
    // rounding floor so steps near the optimum, where objective differences
    // sink below double precision, are still accepted.
    const double noise = 1e-15 * (1.0 + std::abs(value));
    double step = 1.0;
    double value_new = -std::numeric_limits<double>::infinity();
    Vec x_new;
    bool accepted = false;
    for (int halvings = 0; halvings < 48 && res.n_evals < cfg.max_evals; ++halvings) {
      x_new = res.x + step * dir;
      value_new = f(x_new, grad_new);
      ++res.n_evals;
      if (std::isfinite(value_new) &&
          value_new >= value + kArmijo * step * slope - noise) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }

    if (!accepted) {
      if (!reset_since_fail) {  // one restart with a fresh curvature estimate
        hinv.setIdentity();
        reset_since_fail = true;
        continue;
      }
      break;
    }
    reset_since_fail = false;

    const Vec s = x_new - res.x;
    const Vec y = grad_new - grad;  // note: ascent, so curvature pairs flip sign
    res.x = std::move(x_new);
    value = value_new;
    grad = grad_new;
    res.trace.push_back(value);

    const double sy = -s.dot(y);  // > 0 for concave objectives
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const Vec hy = hinv * (-y);
      const double yhy = (-y).dot(hy);
      // BFGS inverse update on the negated gradient system.
      hinv += ((sy + yhy) / (sy * sy)) * (s * s.transpose()) -
              (hy * s.transpose() + s * hy.transpose()) / sy;
    }
  }

  res.value = value;
  res.grad_norm = grad.lpNorm<Eigen::Infinity>();
  if (res.grad_norm <= cfg.grad_tol) res.converged = true;
  return res;
}

}  // namespace frailty
