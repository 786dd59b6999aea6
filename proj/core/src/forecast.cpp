#include "frailty/forecast.hpp"

#include <fmt/format.h>

#include <cmath>
#include <limits>
#include <vector>

namespace frailty {

namespace {

constexpr double kMaxExponent = 709.0;
constexpr std::uint64_t kStreamStartPick = 21;
constexpr std::uint64_t kStreamFrailty = 22;

struct Ols {
  std::int64_t n = 0;
  long double sx = 0, sy = 0, sxx = 0, sxy = 0;

  void add(double x, double y) {
    sx += x;
    sy += y;
    sxx += static_cast<long double>(x) * x;
    sxy += static_cast<long double>(x) * y;
    ++n;
  }

  Ar1 fit(std::string_view name) const {
    if (n < 2) throw Error(fmt::format("covariate model: too few transitions for '{}'", name));
    const double nn = static_cast<double>(n);
    const double mx = static_cast<double>(sx) / nn;
    const double my = static_cast<double>(sy) / nn;
    const double vxx = static_cast<double>(sxx) / nn - mx * mx;
    const double vxy = static_cast<double>(sxy) / nn - mx * my;
    if (vxx <= 0.0)
      throw Error(fmt::format("covariate model: degenerate regressor '{}'", name));
    Ar1 m;
    m.phi = vxy / vxx;
    m.intercept = my - m.phi * mx;
    return m;
  }
};

double residual_sd(const Ar1& m, const std::vector<std::pair<double, double>>& xy) {
  long double rss = 0.0;
  for (const auto& [x, y] : xy) {
    const double r = y - (m.intercept + m.phi * x);
    rss += static_cast<long double>(r) * r;
  }
  const std::int64_t dof = static_cast<std::int64_t>(xy.size()) - 2;
  return dof > 0 ? std::sqrt(static_cast<double>(rss) / dof) : 0.0;
}

}  // namespace

CovariateForecastModel fit_covariate_model(const FirmPanel& panel, int t0, int t1) {
  if (t0 < panel.first_month || t1 > panel.last_month || t0 > t1)
    throw Error(fmt::format("covariate model: window [{}, {}] outside panel [{}, {}]", t0,
                            t1, panel.first_month, panel.last_month));
  const int dim = panel.covariate_dim();
  const int n_firm_covs = dim - 1 - kMacroCount;
  CovariateForecastModel model;

  // Macro covariates: AR(1) on the shared series.
  int macro_months = 0;
  for (int t = t0; t <= t1; ++t)
    if (std::isfinite(panel.macro(t - panel.first_month, 0))) ++macro_months;
  if (macro_months < 24)
    throw Error(fmt::format("covariate model: {} macro months in window, need >= 24",
                            macro_months));
  for (int m = 0; m < kMacroCount; ++m) {
    Ols ols;
    std::vector<std::pair<double, double>> xy;
    for (int t = t0; t < t1; ++t) {
      const double x = panel.macro(t - panel.first_month, m);
      const double y = panel.macro(t + 1 - panel.first_month, m);
      if (std::isfinite(x) && std::isfinite(y)) {
        ols.add(x, y);
        xy.emplace_back(x, y);
      }
    }
    Ar1 fit = ols.fit(kCovariateNames[1 + m]);
    if (std::abs(fit.phi) >= 1.0)
      throw Error(fmt::format("covariate model: non-stationary macro covariate '{}' "
                              "(phi={})",
                              kCovariateNames[1 + m], fit.phi));
    fit.innovation_sd = residual_sd(fit, xy);
    model.macro.push_back(fit);
  }

  // Firm covariates: AR(1) pooled across firms.
  std::int64_t pooled = 0;
  for (int j = 0; j < n_firm_covs; ++j) {
    const int col = 1 + kMacroCount + j;
    Ols ols;
    std::vector<std::pair<double, double>> xy;
    for (const auto& firm : panel.firms) {
      const int a = std::max(firm.entry_month, t0);
      const int b = std::min(firm.exit_month(), t1);
      for (int month = a; month < b; ++month) {
        const double x = firm.covariates(month - firm.entry_month, col);
        const double y = firm.covariates(month + 1 - firm.entry_month, col);
        ols.add(x, y);
        xy.emplace_back(x, y);
      }
    }
    if (j == 0) pooled = ols.n;
    const std::string_view name =
        col < kCovariateDim ? kCovariateNames[col] : std::string_view("covariate");
    Ar1 fit = ols.fit(name);
    fit.innovation_sd = residual_sd(fit, xy);
    model.firm.push_back(fit);
  }
  if (n_firm_covs > 0 && pooled < 100)
    throw Error(fmt::format("covariate model: {} pooled firm transitions, need >= 100",
                            pooled));
  return model;
}

Mat forecast_frailty(Eigen::Ref<const Vec> terminal_samples, const OuParams& ou,
                     int tau, int n_draws, std::uint64_t seed) {
  if (terminal_samples.size() == 0) throw Error("forecast_frailty: no terminal samples");
  if (tau < 0) throw Error("forecast_frailty: tau must be >= 0");
  if (tau == 0) return terminal_samples;

  const int n_terminal = static_cast<int>(terminal_samples.size());
  Mat draws(n_draws, tau + 1);
  RngStream pick(seed, kStreamStartPick);
  for (int d = 0; d < n_draws; ++d) {
    const int start =
        std::min(n_terminal - 1, static_cast<int>(pick.uniform_at(d) * n_terminal));
    RngStream noise(seed, kStreamFrailty, static_cast<std::uint64_t>(d));
    std::uint64_t step = 0;
    const FrailtyPath path = simulate_path(ou, 0, tau, terminal_samples(start),
                                           [&] { return noise.normal_at(step++); });
    draws.row(d) = path.h.transpose();
  }
  return draws;
}

PdTermStructure default_probability(const std::string& firm_id,
                                    Eigen::Ref<const Vec> firm_state,
                                    const CovariateForecastModel& model,
                                    const Mat& frailty_draws, const Theta& theta,
                                    int tau, const ForecastConfig& cfg,
                                    std::uint64_t seed) {
  if (tau < 1) throw Error("default_probability: tau must be >= 1");
  if (frailty_draws.cols() < tau)
    throw Error(fmt::format("default_probability: frailty draws cover {} months, need {}",
                            frailty_draws.cols(), tau));
  theta.validate();
  const int dim = static_cast<int>(firm_state.size());
  const int n_firm_covs = dim - 1 - kMacroCount;
  if (static_cast<int>(model.macro.size()) != kMacroCount ||
      static_cast<int>(model.firm.size()) != n_firm_covs)
    throw Error("default_probability: covariate model does not match the state dimension");

  const std::uint64_t firm_key = fnv1a64(firm_id);
  PdTermStructure ts;
  ts.firm_id = firm_id;
  ts.pd = Vec::Zero(tau);

  Vec z(dim);
  for (int d = 0; d < cfg.n_draws; ++d) {
    z = firm_state;
    const int fr_row = static_cast<int>(d % frailty_draws.rows());
    RngStream noise(seed, firm_key, static_cast<std::uint64_t>(d));
    std::uint64_t ctr = 0;
    double cumhaz = 0.0;
    for (int u = 1; u <= tau; ++u) {
      const double h = frailty_draws(fr_row, u - 1);
      const double exponent = theta.kappa.dot(z) + theta.xi * h;
      if (!(exponent <= kMaxExponent))
        throw Error(fmt::format("intensity overflow (exponent={}) in draw {} month {}",
                                exponent, d, u));
      cumhaz += std::exp(exponent);
      ts.pd(u - 1) += -std::expm1(-cumhaz);
      // Advance the covariates to month u (used by the next step's hazard).
      for (int m = 0; m < kMacroCount; ++m) {
        const double eps = cfg.stochastic_covariates ? noise.normal_at(ctr) : 0.0;
        ++ctr;
        z(1 + m) = model.macro[m].step(z(1 + m), eps);
      }
      for (int j = 0; j < n_firm_covs; ++j) {
        const double eps = cfg.stochastic_covariates ? noise.normal_at(ctr) : 0.0;
        ++ctr;
        z(1 + kMacroCount + j) = model.firm[j].step(z(1 + kMacroCount + j), eps);
      }
    }
  }
  ts.pd /= cfg.n_draws;
  ts.survival = (1.0 - ts.pd.array()).matrix();
  return ts;
}

}  // namespace frailty
