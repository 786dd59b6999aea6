#include "frailty/estimation.hpp"

#include "frailty/ou.hpp"

#include <fmt/format.h>

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace frailty {

namespace {

constexpr double kMaxExponent = 709.0;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Aggregates of the panel that do not depend on the parameter value.
struct FixedPanelTerms {
  int first_month = 0;
  int n_months = 0;
  Vec def_z_sum;       // sum of z over default cells
  Vec defaults_per_month;
};

FixedPanelTerms fixed_terms(const FirmPanel& panel) {
  FixedPanelTerms ft;
  ft.first_month = panel.first_month;
  ft.n_months = panel.n_months();
  ft.def_z_sum = Vec::Zero(panel.covariate_dim());
  ft.defaults_per_month = Vec::Zero(ft.n_months);
  for (const auto& firm : panel.firms)
    for (int t = 0; t < firm.n_months(); ++t)
      if (firm.defaults[t]) {
        ft.def_z_sum += firm.covariates.row(t).transpose();
        ft.defaults_per_month(firm.entry_month + t - panel.first_month) += 1.0;
      }
  return ft;
}

// S_t(kappa) and G_t(kappa) = sum_i e^{kappa.z} and sum_i e^{kappa.z} z for
// every month; false on exponent overflow (caller treats the point as
// infeasible).
bool exp_month_sums(const FirmPanel& panel, const Vec& kappa, Vec& s, Mat& g) {
  s.setZero();
  g.setZero();
  for (const auto& firm : panel.firms) {
    for (int t = 0; t < firm.n_months(); ++t) {
      const double c = kappa.dot(firm.covariates.row(t));
      if (!(c <= kMaxExponent)) return false;
      const double e = std::exp(c);
      const int idx = firm.entry_month + t - panel.first_month;
      s(idx) += e;
      g.row(idx) += e * firm.covariates.row(t);
    }
  }
  return true;
}

struct GaussianPriorTerms {
  bool active = false;
  Vec mu;
  Eigen::LLT<Mat> llt;
  double log_norm = 0.0;  // -1/2 log((2 pi)^n |Sigma|)
};

GaussianPriorTerms prior_terms(const PriorSpec& prior, int gamma_dim) {
  GaussianPriorTerms pt;
  if (prior.is_uniform()) return pt;
  if (prior.gaussian.mu.size() != gamma_dim)
    throw Error(fmt::format("prior dimension {} does not match gamma dimension {}",
                            prior.gaussian.mu.size(), gamma_dim));
  pt.active = true;
  pt.mu = prior.gaussian.mu;
  pt.llt.compute(prior.gaussian.sigma);
  if (pt.llt.info() != Eigen::Success)
    throw Error("prior covariance not positive definite");
  pt.log_norm =
      -0.5 * gamma_dim * std::log(2.0 * std::numbers::pi) -
      pt.llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return pt;
}

// Path-averaged log-posterior over gamma = (kappa, xi) and its gradient.
// With A_t(xi) = mean_p e^{xi h_t^p} the objective is
//   sum_t [-dt A_t S_t(kappa)] + kappa . def_z + xi sum_t d_t hbar_t + prior.
class GammaObjective {
 public:
  GammaObjective(const FirmPanel& panel, const std::vector<FrailtyPath>& paths,
                 const PriorSpec& prior, double dt)
      : panel_(panel), ft_(fixed_terms(panel)), dt_(dt) {
    const int T = ft_.n_months;
    const int P = static_cast<int>(paths.size());
    if (P == 0) throw Error("m-step needs at least one frailty path");
    h_.resize(T, P);
    for (int p = 0; p < P; ++p) {
      if (!paths[p].covers(panel.first_month, panel.last_month))
        throw Error("m-step: frailty path does not cover the panel window");
      for (int t = 0; t < T; ++t) h_(t, p) = paths[p].at(panel.first_month + t);
    }
    hbar_ = h_.rowwise().mean();
    dim_ = panel.covariate_dim();
    pt_ = prior_terms(prior, dim_ + 1);
    s_.resize(T);
    g_.resize(T, dim_);
  }

  int gamma_dim() const { return dim_ + 1; }

  double operator()(const Vec& gamma, Vec& grad) {
    const int T = ft_.n_months;
    const int P = static_cast<int>(h_.cols());
    const Vec kappa = gamma.head(dim_);
    const double xi = gamma(dim_);
    grad.setZero(dim_ + 1);

    if (!exp_month_sums(panel_, kappa, s_, g_)) return kNegInf;

    Vec a(T), ap(T);
    for (int t = 0; t < T; ++t) {
      double sa = 0.0, sap = 0.0;
      for (int p = 0; p < P; ++p) {
        const double x = xi * h_(t, p);
        if (!(x <= kMaxExponent)) return kNegInf;
        const double e = std::exp(x);
        sa += e;
        sap += h_(t, p) * e;
      }
      a(t) = sa / P;
      ap(t) = sap / P;
    }

    const double def_h = ft_.defaults_per_month.dot(hbar_);
    double value = -dt_ * a.dot(s_) + kappa.dot(ft_.def_z_sum) + xi * def_h;
    if (dt_ != 1.0) value += ft_.defaults_per_month.sum() * std::log(dt_);
    grad.head(dim_) = -dt_ * (g_.transpose() * a) + ft_.def_z_sum;
    grad(dim_) = -dt_ * ap.dot(s_) + def_h;

    if (pt_.active) {
      const Vec centered = gamma - pt_.mu;
      const Vec alpha = pt_.llt.matrixL().solve(centered);
      value += -0.5 * alpha.squaredNorm() + pt_.log_norm;
      grad -= pt_.llt.solve(centered);
    }
    return value;
  }

 private:
  const FirmPanel& panel_;
  FixedPanelTerms ft_;
  double dt_;
  int dim_ = 0;
  Mat h_;     // n_months x n_paths
  Vec hbar_;  // per-month path mean
  GaussianPriorTerms pt_;
  Vec s_;
  Mat g_;
};

}  // namespace

Vec fit_no_frailty(const FirmPanel& panel, const OptimizerConfig& cfg) {
  const int dim = panel.covariate_dim();
  {
    std::int64_t defaults = 0;
    for (const auto& f : panel.firms) defaults += f.defaulted() ? 1 : 0;
    if (defaults == 0) throw Error("no defaults: kappa unbounded");
  }

  // Standardize the covariate columns: the raw scales differ by orders of
  // magnitude and wreck the quasi-Newton conditioning from a cold start. The
  // map is affine, so the maximizer transforms back exactly.
  const std::int64_t n_cells = panel.n_cells();
  Vec mean = Vec::Zero(dim), sd = Vec::Ones(dim);
  for (const auto& f : panel.firms) mean += f.covariates.colwise().sum().transpose();
  mean /= static_cast<double>(n_cells);
  mean(0) = 0.0;
  Vec ss = Vec::Zero(dim);
  for (const auto& f : panel.firms)
    ss += (f.covariates.rowwise() - mean.transpose()).colwise().squaredNorm().transpose();
  for (int j = 1; j < dim; ++j) {
    const double v = ss(j) / static_cast<double>(n_cells);
    if (v > 0.0) sd(j) = std::sqrt(v);
  }

  FirmPanel scaled = panel;
  for (auto& f : scaled.firms) {
    f.covariates = (f.covariates.rowwise() - mean.transpose()).array().rowwise() /
                   sd.transpose().array();
    f.covariates.col(0).setOnes();
  }

  const FixedPanelTerms ft = fixed_terms(scaled);
  Vec s(ft.n_months);
  Mat g(ft.n_months, dim);
  auto objective = [&](const Vec& kappa, Vec& grad) -> double {
    grad.setZero(dim);
    if (!exp_month_sums(scaled, kappa, s, g)) return kNegInf;
    grad = ft.def_z_sum - g.colwise().sum().transpose();
    return -s.sum() + kappa.dot(ft.def_z_sum);
  };

  OptimizerConfig scfg = cfg;
  scfg.grad_tol = cfg.grad_tol / sd.maxCoeff();
  OptimResult res = maximize_bfgs(objective, Vec::Zero(dim), scfg);
  if (!res.converged) {
    std::string tail;
    for (std::size_t i = res.trace.size() > 5 ? res.trace.size() - 5 : 0;
         i < res.trace.size(); ++i)
      tail += fmt::format(" {:.6g}", res.trace[i]);
    throw Error(fmt::format(
        "fit_no_frailty did not converge (grad norm {:.3g} after {} evals; trace tail:{})",
        res.grad_norm, res.n_evals, tail));
  }

  Vec kappa(dim);
  for (int j = 1; j < dim; ++j) kappa(j) = res.x(j) / sd(j);
  kappa(0) = res.x(0);
  for (int j = 1; j < dim; ++j) kappa(0) -= res.x(j) * mean(j) / sd(j);
  return kappa;
}

Vec mstep_gamma(const std::vector<FrailtyPath>& paths, const FirmPanel& panel,
                const PriorSpec& prior, Eigen::Ref<const Vec> start,
                const OptimizerConfig& cfg) {
  GammaObjective obj(panel, paths, prior, 1.0);
  if (start.size() != obj.gamma_dim())
    throw Error(fmt::format("mstep_gamma: start has dim {}, expected {}", start.size(),
                            obj.gamma_dim()));
  OptimResult res = maximize_bfgs([&obj](const Vec& x, Vec& g) { return obj(x, g); },
                                  start, cfg);
  if (!res.converged)
    throw Error(fmt::format(
        "mstep_gamma line search failed (grad norm {:.3g} after {} evals, last objective "
        "{:.6g})",
        res.grad_norm, res.n_evals, res.value));
  return res.x;
}

std::pair<double, double> mstep_ou(const std::vector<FrailtyPath>& paths, double dt) {
  std::int64_t n = 0;
  long double sxx = 0.0, sxy = 0.0;
  for (const auto& path : paths) {
    if (path.n_months() < 3) throw Error("mstep_ou: paths must span at least 3 months");
    for (int t = 0; t + 1 < path.n_months(); ++t) {
      sxx += static_cast<long double>(path.h(t)) * path.h(t);
      sxy += static_cast<long double>(path.h(t)) * path.h(t + 1);
      ++n;
    }
  }
  if (n < 2 || sxx == 0.0) throw Error("degenerate OU regression");
  // Slopes slightly above one arise from sampling noise near eta = 0 and
  // clamp to the unit-root boundary; anything further out is a fault.
  double a = static_cast<double>(sxy / sxx);
  if (!(a > 0.0) || a > 1.05)
    throw Error(fmt::format("OU regression out of range (a={})", a));
  a = std::min(a, 1.0);

  long double rss = 0.0;
  for (const auto& path : paths)
    for (int t = 0; t + 1 < path.n_months(); ++t) {
      const double r = path.h(t + 1) - a * path.h(t);
      rss += static_cast<long double>(r) * r;
    }
  const double v = static_cast<double>(rss) / static_cast<double>(n);
  if (v <= 0.0) throw Error("degenerate OU regression (zero residual variance)");

  const double eta = -std::log(a) / dt;
  // Invert v = sigma^2 (1 - a^2) / (2 eta); the a -> 1 limit is sigma^2 dt.
  const double sigma2 = (1.0 - a * a) < 1e-12 ? v / dt : v * 2.0 * eta / (1.0 - a * a);
  return {eta, std::sqrt(sigma2)};
}

Inference asymptotic_inference(const std::function<double(const Vec&)>& objective,
                               Eigen::Ref<const Vec> theta_hat) {
  const int n = static_cast<int>(theta_hat.size());
  Vec steps(n);
  for (int j = 0; j < n; ++j) steps(j) = 1e-4 * std::max(std::abs(theta_hat(j)), 1.0);

  const double f0 = objective(theta_hat);
  if (!std::isfinite(f0)) throw Error("asymptotic_inference: objective not finite");
  Mat hess(n, n);
  Vec x = theta_hat;
  for (int j = 0; j < n; ++j) {
    x = theta_hat;
    x(j) = theta_hat(j) + steps(j);
    const double fp = objective(x);
    x(j) = theta_hat(j) - steps(j);
    const double fm = objective(x);
    hess(j, j) = (fp - 2.0 * f0 + fm) / (steps(j) * steps(j));
    for (int k = j + 1; k < n; ++k) {
      x = theta_hat;
      x(j) += steps(j);
      x(k) += steps(k);
      const double fpp = objective(x);
      x(k) -= 2.0 * steps(k);
      const double fpm = objective(x);
      x(j) -= 2.0 * steps(j);
      const double fmm = objective(x);
      x(k) += 2.0 * steps(k);
      const double fmp = objective(x);
      hess(j, k) = hess(k, j) = (fpp - fpm - fmp + fmm) / (4.0 * steps(j) * steps(k));
    }
  }

  Eigen::LLT<Mat> llt(Mat(-hess));
  if (llt.info() != Eigen::Success) throw Error("not at a maximum");
  const Mat cov = llt.solve(Mat::Identity(n, n));

  Inference inf;
  inf.se = cov.diagonal().array().sqrt();
  inf.t_stats = theta_hat.array() / inf.se.array();
  inf.ci_lower = theta_hat - 1.96 * inf.se;
  inf.ci_upper = theta_hat + 1.96 * inf.se;
  return inf;
}

namespace {

// Chain length so that at least n_paths samples survive burn-in/thinning.
int resolve_chain_length(const PimhConfig& cfg, int n_paths) {
  const int thin = cfg.thin > 0 ? cfg.thin : 1;
  for (int k = std::max(0, (n_paths - 1) * thin);; ++k) {
    const int burn = cfg.burn_in >= 0 ? cfg.burn_in : k / 10;
    if (k >= burn && (k - burn) / thin + 1 >= n_paths) return k;
  }
}

// Relaxed OU path log-density: valid for any real eta (finite-difference
// probes may step slightly below zero at a boundary maximum).
double ou_path_logdensity_any_eta(const Mat& h, double eta, double sigma, double dt) {
  if (!(sigma > 0.0)) return kNegInf;
  const double x = 2.0 * eta * dt;
  const double v = std::abs(x) < 1e-12 ? sigma * sigma * dt
                                       : sigma * sigma * (-std::expm1(-x)) / (2.0 * eta);
  if (!(v > 0.0)) return kNegInf;
  const double a = std::exp(-eta * dt);
  const double log_norm = -0.5 * std::log(2.0 * std::numbers::pi * v);
  long double acc = 0.0;
  const int T = static_cast<int>(h.rows());
  const int P = static_cast<int>(h.cols());
  for (int p = 0; p < P; ++p)
    for (int t = 1; t < T; ++t) {
      const double r = h(t, p) - a * h(t - 1, p);
      acc += log_norm - 0.5 * r * r / v;
    }
  return static_cast<double>(acc) / P;
}

}  // namespace

ThetaEstimate em_estimate(const FirmPanel& panel, const PriorSpec& prior,
                          const EmConfig& cfg) {
  panel.validate();
  const int dim = panel.covariate_dim();
  if (!prior.is_uniform() && prior.gaussian.mu.size() != dim + 1)
    throw Error(fmt::format("prior dimension {} does not match gamma dimension {}",
                            prior.gaussian.mu.size(), dim + 1));

  ThetaEstimate est;
  est.n_observations = panel.n_cells();

  Vec kappa0 = fit_no_frailty(panel, cfg.optimizer);
  Theta theta;
  theta.kappa = kappa0;
  theta.xi = 0.05;
  theta.eta = 0.01;
  theta.sigma = cfg.fix_sigma.value_or(1.0);

  std::vector<FrailtyPath> paths;
  double loglik_prev = std::numeric_limits<double>::quiet_NaN();
  int consecutive = 0;
  int iter = 0;

  PimhConfig pimh_cfg = cfg.pimh;
  pimh_cfg.k_iterations = resolve_chain_length(cfg.pimh, cfg.n_paths_per_iter);

  for (iter = 1; iter <= cfg.max_iters; ++iter) {
    pimh_cfg.seed = derive_seed(cfg.seed, 0xE5, static_cast<std::uint64_t>(iter));
    PimhChain chain;
    try {
      chain = run_pimh(panel, theta, pimh_cfg);
    } catch (const Error& e) {
      throw Error(fmt::format("em iteration {}: {}", iter, e.what()));
    }
    paths = chain.kept_paths();

    // The monitored objective is the filter's observed-data log-likelihood
    // estimate at the current parameter value; convergence is judged on the
    // likelihood, not on the complete-data surrogate.
    const double loglik = chain.mean_log_marginal();
    est.trace.push_back(loglik);

    Vec gamma;
    try {
      gamma = mstep_gamma(paths, panel, prior, make_gamma(theta.kappa, theta.xi),
                          cfg.optimizer);
    } catch (const Error& e) {
      throw Error(fmt::format("em iteration {}: {}", iter, e.what()));
    }
    if (gamma(dim) < 0.0) {
      // (xi, h) -> (-xi, -h) is a reflection symmetry of the complete-data
      // likelihood and of the OU law; keep the xi >= 0 representative.
      gamma(dim) = -gamma(dim);
      for (auto& p : paths) p.h = -p.h;
    }
    theta.kappa = gamma.head(dim);
    theta.xi = gamma(dim);

    auto [eta_hat, sigma_hat] = mstep_ou(paths);
    theta.eta = eta_hat;
    theta.sigma = cfg.fix_sigma.value_or(sigma_hat);

    if (iter > 1 && std::abs(loglik - loglik_prev) < cfg.tol) {
      if (++consecutive >= cfg.tol_consecutive) {
        loglik_prev = loglik;
        break;
      }
    } else {
      consecutive = 0;
    }
    loglik_prev = loglik;
  }
  est.iterations = std::min(iter, cfg.max_iters);
  est.theta = theta;

  // Observed-data log-likelihood estimate at the final parameter value.
  {
    PimhConfig final_cfg = pimh_cfg;
    final_cfg.seed = derive_seed(cfg.seed, 0xF1, 0);
    est.loglik = run_pimh(panel, theta, final_cfg).mean_log_marginal();
  }

  // Hessian-based inference on the full parameter vector at the maximum,
  // using the final iteration's path sample.
  const bool with_sigma = !cfg.fix_sigma.has_value();
  const int n_params = dim + 2 + (with_sigma ? 1 : 0);
  Vec phi(n_params);
  phi.head(dim) = theta.kappa;
  phi(dim) = theta.xi;
  phi(dim + 1) = theta.eta;
  if (with_sigma) phi(dim + 2) = theta.sigma;

  Mat h(panel.n_months(), paths.size());
  for (std::size_t p = 0; p < paths.size(); ++p)
    for (int t = 0; t < panel.n_months(); ++t)
      h(t, p) = paths[p].at(panel.first_month + t);
  GammaObjective gobj(panel, paths, prior, 1.0);

  auto full_objective = [&](const Vec& x) -> double {
    Vec dummy;
    const double sigma = with_sigma ? x(dim + 2) : *cfg.fix_sigma;
    return gobj(x.head(dim + 1), dummy) +
           ou_path_logdensity_any_eta(h, x(dim + 1), sigma, 1.0);
  };
  const Inference inf = asymptotic_inference(full_objective, phi);

  est.estimates = phi;
  est.se = inf.se;
  est.t_stats = inf.t_stats;
  est.ci_lower = inf.ci_lower;
  est.ci_upper = inf.ci_upper;
  for (int j = 0; j < dim; ++j)
    est.param_names.push_back(j < kCovariateDim ? std::string(kCovariateNames[j])
                                                : fmt::format("covariate_{}", j));
  est.param_names.emplace_back("xi");
  est.param_names.emplace_back("eta");
  if (with_sigma) est.param_names.emplace_back("sigma");
  return est;
}

}  // namespace frailty
