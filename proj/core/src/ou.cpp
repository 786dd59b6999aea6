#include "frailty/ou.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numbers>

namespace frailty {

void OuParams::validate() const {
  if (!(eta >= 0.0) || !std::isfinite(eta))
    throw Error("ou: eta must be finite and >= 0");
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw Error("ou: sigma must be finite and > 0");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error("ou: dt must be finite and > 0");
}

OuTransition transition_params(const OuParams& p) {
  p.validate();
  OuTransition tr;
  tr.a = std::exp(-p.eta * p.dt);
  // v = sigma^2 (1 - e^{-2 eta dt}) / (2 eta); the eta -> 0 limit is sigma^2 dt.
  // -expm1 keeps the small-eta branch accurate.
  const double x = 2.0 * p.eta;
  tr.v = (x * p.dt < 1e-12) ? p.sigma * p.sigma * p.dt
                            : p.sigma * p.sigma * (-std::expm1(-x * p.dt)) / x;
  return tr;
}

double log_transition_density(double h_next, double h, const OuParams& p) {
  const OuTransition tr = transition_params(p);
  if (tr.v <= 0.0) throw Error("degenerate transition");
  const double r = h_next - tr.a * h;
  return -0.5 * (std::log(2.0 * std::numbers::pi * tr.v) + r * r / tr.v);
}

double path_log_density(const FrailtyPath& path, const OuParams& p) {
  const OuTransition tr = transition_params(p);
  if (tr.v <= 0.0) throw Error("degenerate transition");
  const double log_norm = -0.5 * std::log(2.0 * std::numbers::pi * tr.v);
  long double acc = 0.0;
  for (int i = 1; i < path.h.size(); ++i) {
    const double r = path.h(i) - tr.a * path.h(i - 1);
    acc += log_norm - 0.5 * r * r / tr.v;
  }
  return static_cast<double>(acc);
}

}  // namespace frailty
