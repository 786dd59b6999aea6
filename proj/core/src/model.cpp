#include "frailty/model.hpp"

#include <fmt/format.h>

#include <Eigen/Cholesky>

#include <cmath>
#include <numbers>

namespace frailty {

namespace {
// exp() overflows to +inf slightly above this.
constexpr double kMaxExponent = 709.0;
}  // namespace

double intensity(Eigen::Ref<const Vec> z, double h, const Theta& theta) {
  const double exponent = theta.kappa.dot(z) + theta.xi * h;
  if (!(exponent <= kMaxExponent))
    throw Error(fmt::format("intensity overflow (exponent={})", exponent));
  return std::exp(exponent);
}

double period_loglik(double lambda, double dt, bool defaulted) {
  const double lam_dt = lambda * dt;
  if (lam_dt < 0.0) throw Error("period_loglik: lambda dt must be >= 0");
  if (!defaulted) return -lam_dt;
  if (lam_dt == 0.0) throw Error("default with zero intensity");
  return std::log(lam_dt) - lam_dt;
}

double complete_data_loglik(const FirmPanel& panel, const FrailtyPath& path,
                            const Theta& theta, double dt) {
  if (!path.covers(panel.first_month, panel.last_month))
    throw Error(fmt::format("frailty path [{}, {}] does not cover panel [{}, {}]",
                            path.start_month, path.last_month(), panel.first_month,
                            panel.last_month));
  long double acc = 0.0;
  for (const auto& firm : panel.firms) {
    for (int t = 0; t < firm.n_months(); ++t) {
      const int month = firm.entry_month + t;
      const double exponent =
          theta.kappa.dot(firm.covariates.row(t)) + theta.xi * path.at(month);
      if (!(exponent <= kMaxExponent))
        throw Error(fmt::format("intensity overflow (exponent={}) at firm {} month {}",
                                exponent, firm.firm_id, month));
      const double lam_dt = std::exp(exponent) * dt;
      if (firm.defaults[t]) {
        if (lam_dt == 0.0)
          throw Error(fmt::format("default with zero intensity at firm {} month {}",
                                  firm.firm_id, month));
        acc += std::log(lam_dt) - lam_dt;
      } else {
        acc += -lam_dt;
      }
    }
  }
  return static_cast<double>(acc);
}

double log_prior(Eigen::Ref<const Vec> gamma, const PriorSpec& prior) {
  if (prior.is_uniform()) return 0.0;
  const auto& g = prior.gaussian;
  if (gamma.size() != g.mu.size())
    throw Error(fmt::format("log_prior: gamma has dim {} but prior has dim {}",
                            gamma.size(), g.mu.size()));
  Eigen::LLT<Mat> llt(g.sigma);
  if (llt.info() != Eigen::Success)
    throw Error("prior covariance not positive definite");
  const Vec centered = gamma - g.mu;
  const Vec alpha = llt.matrixL().solve(centered);
  const double log_det_half = llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double n = static_cast<double>(g.mu.size());
  return -0.5 * alpha.squaredNorm() - 0.5 * n * std::log(2.0 * std::numbers::pi) -
         log_det_half;
}

double log_posterior(const FirmPanel& panel, const FrailtyPath& path,
                     const Theta& theta, const PriorSpec& prior, double dt) {
  return complete_data_loglik(panel, path, theta, dt) +
         log_prior(make_gamma(theta.kappa, theta.xi), prior);
}

Vec grad_log_posterior_gamma(const FirmPanel& panel, const FrailtyPath& path,
                             const Theta& theta, const PriorSpec& prior, double dt) {
  if (!path.covers(panel.first_month, panel.last_month))
    throw Error("grad_log_posterior_gamma: path does not cover panel");
  const int dim = panel.covariate_dim();
  Vec grad = Vec::Zero(dim + 1);
  for (const auto& firm : panel.firms) {
    for (int t = 0; t < firm.n_months(); ++t) {
      const int month = firm.entry_month + t;
      const double h = path.at(month);
      const double exponent = theta.kappa.dot(firm.covariates.row(t)) + theta.xi * h;
      if (!(exponent <= kMaxExponent))
        throw Error(fmt::format("intensity overflow (exponent={}) at firm {} month {}",
                                exponent, firm.firm_id, month));
      const double resid = static_cast<double>(firm.defaults[t]) - std::exp(exponent) * dt;
      grad.head(dim) += resid * firm.covariates.row(t).transpose();
      grad(dim) += resid * h;
    }
  }
  if (!prior.is_uniform()) {
    const auto& g = prior.gaussian;
    Eigen::LLT<Mat> llt(g.sigma);
    if (llt.info() != Eigen::Success)
      throw Error("prior covariance not positive definite");
    grad -= llt.solve(make_gamma(theta.kappa, theta.xi) - g.mu);
  }
  return grad;
}

PanelMonthStats month_stats(const FirmPanel& panel, Eigen::Ref<const Vec> kappa) {
  PanelMonthStats out;
  out.first_month = panel.first_month;
  out.months.assign(panel.n_months(), MonthStats{});
  for (const auto& firm : panel.firms) {
    for (int t = 0; t < firm.n_months(); ++t) {
      const double c = kappa.dot(firm.covariates.row(t));
      out.max_exponent = std::max(out.max_exponent, c);
      if (!(c <= kMaxExponent)) {
        out.overflow = true;
        continue;
      }
      MonthStats& ms = out.months[firm.entry_month + t - panel.first_month];
      ms.sum_exp += std::exp(c);
      if (firm.defaults[t]) {
        ms.n_defaults += 1;
        ms.def_linear += c;
      }
    }
  }
  return out;
}

double obs_logdensity(const MonthStats& ms, double xi, double h, double dt) {
  double value = ms.def_linear;
  if (ms.sum_exp > 0.0) value -= dt * std::exp(xi * h) * ms.sum_exp;
  if (ms.n_defaults > 0) value += ms.n_defaults * (xi * h + std::log(dt));
  return value;
}

double no_frailty_loglik(const FirmPanel& panel, Eigen::Ref<const Vec> kappa,
                         double dt) {
  const PanelMonthStats stats = month_stats(panel, kappa);
  if (stats.overflow)
    throw Error(fmt::format("intensity overflow (exponent={})", stats.max_exponent));
  long double acc = 0.0;
  for (const auto& ms : stats.months) acc += obs_logdensity(ms, 0.0, 0.0, dt);
  return static_cast<double>(acc);
}

}  // namespace frailty
