#include "frailty/smc.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace frailty {

namespace {
// Stream ids within one filter run.
constexpr std::uint64_t kStreamPropagate = 1;
constexpr std::uint64_t kStreamResample = 2;
}  // namespace

std::vector<int> resample(Eigen::Ref<const Vec> weights, Resampling method,
                          RngStream& rng) {
  const int n = static_cast<int>(weights.size());
  std::vector<int> ancestors(n);
  Vec cum(n);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    acc += weights(i);
    cum(i) = acc;
  }
  cum(n - 1) = 1.0;  // guard against rounding in the final bin

  if (method == Resampling::multinomial) {
    for (int i = 0; i < n; ++i) {
      const double u = rng.uniform();
      ancestors[i] = static_cast<int>(
          std::lower_bound(cum.data(), cum.data() + n, u) - cum.data());
    }
  } else {
    const double u0 = rng.uniform();
    int j = 0;
    for (int i = 0; i < n; ++i) {
      const double pos = (i + u0) / n;
      while (cum(j) < pos) ++j;
      ancestors[i] = j;
    }
  }
  return ancestors;
}

SmcOutput run_smc(const FirmPanel& window, const Theta& theta, const SmcConfig& cfg) {
  theta.validate();
  if (cfg.n_particles < 2) throw Error("smc: n_particles must be >= 2");
  const int n_steps = window.n_months();
  if (n_steps <= 0) throw Error("smc: empty panel window");
  const int n = cfg.n_particles;

  const PanelMonthStats stats = month_stats(window, theta.kappa);
  if (stats.overflow)
    throw Error(fmt::format("intensity overflow (exponent={})", stats.max_exponent));
  const OuTransition tr = transition_params({theta.eta, theta.sigma, 1.0});
  const double sd = std::sqrt(tr.v);
  // At eta = 0 the stationary law degenerates; the one-step law is the limit.
  const double init_sd =
      (cfg.initial_law == FrailtyInitialLaw::stationary && theta.eta > 0.0)
          ? theta.sigma / std::sqrt(2.0 * theta.eta)
          : sd;

  Mat particles(n_steps, n);
  Eigen::MatrixXi ancestors(n_steps, n);
  Vec logw(n), weights(n);
  SmcOutput out;
  out.start_month = window.first_month;
  out.ess_by_step.resize(n_steps);

  long double log_marginal = 0.0;
  for (int t = 0; t < n_steps; ++t) {
    if (t == 0) {
      for (int i = 0; i < n; ++i) {
        RngStream prop(cfg.seed, kStreamPropagate, static_cast<std::uint64_t>(i));
        particles(0, i) = init_sd * prop.normal_at(0);
      }
    } else {
      RngStream res(cfg.seed, kStreamResample, static_cast<std::uint64_t>(t));
      const std::vector<int> anc = resample(weights, cfg.resampling, res);
      for (int i = 0; i < n; ++i) {
        RngStream prop(cfg.seed, kStreamPropagate, static_cast<std::uint64_t>(i));
        particles(t, i) = tr.a * particles(t - 1, anc[i]) +
                          sd * prop.normal_at(static_cast<std::uint64_t>(t));
        ancestors(t, i) = anc[i];
      }
    }

    const MonthStats& ms = stats.months[t];
    double max_logw = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      logw(i) = obs_logdensity(ms, theta.xi, particles(t, i));
      max_logw = std::max(max_logw, logw(i));
    }
    if (!std::isfinite(max_logw))
      throw Error(fmt::format("particle degeneracy at step {} (month {})", t,
                              window.first_month + t));

    long double sum_w = 0.0;
    for (int i = 0; i < n; ++i) {
      weights(i) = std::exp(logw(i) - max_logw);
      sum_w += weights(i);
    }
    log_marginal += max_logw + std::log(static_cast<double>(sum_w)) - std::log(n);
    weights /= static_cast<double>(sum_w);
    out.ess_by_step(t) = 1.0 / weights.squaredNorm();
  }

  // Materialize the ancestral path of every surviving particle.
  out.paths.resize(n_steps, n);
  for (int i = 0; i < n; ++i) {
    int slot = i;
    for (int t = n_steps - 1; t >= 0; --t) {
      out.paths(t, i) = particles(t, slot);
      if (t > 0) slot = ancestors(t, slot);
    }
  }
  out.weights = weights;
  out.log_marginal = static_cast<double>(log_marginal);
  return out;
}

}  // namespace frailty
