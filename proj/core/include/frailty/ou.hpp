#ifndef FRAILTY_OU_HPP
#define FRAILTY_OU_HPP

#include "frailty/types.hpp"

#include <cmath>
#include <utility>

namespace frailty {

/// Parameters of the mean-reverting OU process dH = -eta H dt + sigma dW
/// (mean-reversion level fixed at 0) on a grid with step dt months.
struct OuParams {
  double eta = 0.0;
  double sigma = 1.0;
  double dt = 1.0;

  void validate() const;
};

/// One-step exact discretization: H' | H ~ Normal(a H, v).
struct OuTransition {
  double a = 1.0;  // exp(-eta dt), in (0, 1]
  double v = 0.0;  // sigma^2 (1 - exp(-2 eta dt)) / (2 eta), >= 0
};

OuTransition transition_params(const OuParams& p);

/// Simulate h over months [t0, t1] with h[t0] = h0 and
/// h[t+1] = a h[t] + sqrt(v) eps_t, eps_t drawn from next_normal().
template <class NormalGen>
FrailtyPath simulate_path(const OuParams& p, int t0, int t1, double h0,
                          NormalGen&& next_normal) {
  if (t0 > t1) throw Error("simulate_path: t0 > t1");
  const OuTransition tr = transition_params(p);
  const double sd = std::sqrt(tr.v);
  FrailtyPath path;
  path.start_month = t0;
  path.h.resize(t1 - t0 + 1);
  path.h(0) = h0;
  for (int i = 1; i < path.h.size(); ++i)
    path.h(i) = tr.a * path.h(i - 1) + sd * next_normal();
  return path;
}

/// log Normal(h_next; a h, v). Throws on a degenerate (v == 0) transition.
double log_transition_density(double h_next, double h, const OuParams& p);

/// Sum of one-step transition log-densities along a path (the path's OU
/// log-density up to the initial condition).
double path_log_density(const FrailtyPath& path, const OuParams& p);

}  // namespace frailty

#endif  // FRAILTY_OU_HPP
