#ifndef FRAILTY_TESTS_QUADRATURE_HPP
#define FRAILTY_TESTS_QUADRATURE_HPP

// Independent quadrature oracles for the filter and sampler tests. Everything
// here works directly on panel cells and the Gaussian transition densities;
// none of it shares code with the filter implementation it checks.

#include "frailty/types.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace frailty::testing {

struct GaussHermite {
  Vec nodes;    // physicists' convention: integral f(x) e^{-x^2} dx
  Vec weights;
};

/// Golub-Welsch nodes/weights from the Hermite three-term recurrence.
inline GaussHermite gauss_hermite(int n) {
  Mat jacobi = Mat::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = std::sqrt(k / 2.0);
    jacobi(k, k - 1) = b;
    jacobi(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Mat> eig(jacobi);
  GaussHermite gh;
  gh.nodes = eig.eigenvalues();
  gh.weights.resize(n);
  const double mu0 = std::sqrt(std::numbers::pi);
  for (int i = 0; i < n; ++i) {
    const double v0 = eig.eigenvectors()(0, i);
    gh.weights(i) = mu0 * v0 * v0;
  }
  return gh;
}

/// Observation log-density at one month: direct loop over active cells.
inline double oracle_log_g(const FirmPanel& panel, int month, const Theta& theta,
                           double h, double dt = 1.0) {
  double acc = 0.0;
  for (const auto& firm : panel.firms) {
    if (!firm.covers(month)) continue;
    const int t = month - firm.entry_month;
    const double lam_dt =
        std::exp(theta.kappa.dot(firm.covariates.row(t)) + theta.xi * h) * dt;
    acc += firm.defaults[t] ? std::log(lam_dt) - lam_dt : -lam_dt;
  }
  return acc;
}

/// Exact observed-data likelihood by tensor-product Gauss-Hermite quadrature
/// over the frailty path H_1..H_T: H_1 ~ N(0, v), H_t | H_{t-1} ~ N(a H, v)
/// with a = e^{-eta}, v = sigma^2 (1 - e^{-2 eta}) / (2 eta). Returns the log.
/// Intended for T <= 4.
inline double oracle_log_marginal(const FirmPanel& panel, const Theta& theta,
                                  int n_nodes = 64) {
  const GaussHermite gh = gauss_hermite(n_nodes);
  const int T = panel.n_months();
  const double a = std::exp(-theta.eta);
  const double v = theta.eta < 1e-12
                       ? theta.sigma * theta.sigma
                       : theta.sigma * theta.sigma * (1.0 - a * a) / (2.0 * theta.eta);
  const double s = std::sqrt(2.0 * v);
  const double inv_sqrt_pi = 1.0 / std::sqrt(std::numbers::pi);

  // Per-month scaling keeps the integrand near 1.
  std::vector<double> scale(T);
  for (int t = 0; t < T; ++t)
    scale[t] = oracle_log_g(panel, panel.first_month + t, theta, 0.0);

  struct Recurse {
    const FirmPanel& panel;
    const Theta& theta;
    const GaussHermite& gh;
    const std::vector<double>& scale;
    double a, s, inv_sqrt_pi;
    int T;

    double operator()(int t, double h_prev) const {
      double acc = 0.0;
      for (int k = 0; k < gh.nodes.size(); ++k) {
        const double h = (t == 0 ? 0.0 : a * h_prev) + s * gh.nodes(k);
        const double g = std::exp(
            oracle_log_g(panel, panel.first_month + t, theta, h) - scale[t]);
        acc += gh.weights(k) * inv_sqrt_pi * g *
               (t + 1 < T ? (*this)(t + 1, h) : 1.0);
      }
      return acc;
    }
  };

  Recurse rec{panel, theta, gh, scale, a, s, inv_sqrt_pi, T};
  double log_total = std::log(rec(0, 0.0));
  for (int t = 0; t < T; ++t) log_total += scale[t];
  return log_total;
}

/// Posterior of H_1 on a T = 2 window: density on a grid plus the posterior
/// mean and a CDF interpolator, all by direct quadrature.
struct PosteriorH1 {
  Vec grid;
  Vec cdf;
  double mean = 0.0;

  double cdf_at(double x) const {
    if (x <= grid(0)) return 0.0;
    if (x >= grid(grid.size() - 1)) return 1.0;
    const int n = static_cast<int>(grid.size());
    int lo = 0, hi = n - 1;
    while (hi - lo > 1) {
      const int mid = (lo + hi) / 2;
      (grid(mid) <= x ? lo : hi) = mid;
    }
    const double w = (x - grid(lo)) / (grid(lo + 1) - grid(lo));
    return cdf(lo) + w * (cdf(lo + 1) - cdf(lo));
  }
};

inline PosteriorH1 oracle_posterior_h1(const FirmPanel& panel, const Theta& theta,
                                       int n_grid = 8001, int n_nodes = 64) {
  if (panel.n_months() != 2) throw Error("oracle_posterior_h1 expects T = 2");
  const GaussHermite gh = gauss_hermite(n_nodes);
  const double a = std::exp(-theta.eta);
  const double v = theta.eta < 1e-12
                       ? theta.sigma * theta.sigma
                       : theta.sigma * theta.sigma * (1.0 - a * a) / (2.0 * theta.eta);
  const double s = std::sqrt(2.0 * v);
  const double sd = std::sqrt(v);
  const double inv_sqrt_pi = 1.0 / std::sqrt(std::numbers::pi);
  const double scale1 = oracle_log_g(panel, panel.first_month, theta, 0.0);
  const double scale2 = oracle_log_g(panel, panel.first_month + 1, theta, 0.0);

  PosteriorH1 post;
  post.grid.resize(n_grid);
  Vec dens(n_grid);
  const double lo = -10.0 * sd, hi = 10.0 * sd;
  for (int i = 0; i < n_grid; ++i) {
    const double h1 = lo + (hi - lo) * i / (n_grid - 1);
    post.grid(i) = h1;
    double inner = 0.0;
    for (int k = 0; k < n_nodes; ++k) {
      const double h2 = a * h1 + s * gh.nodes(k);
      inner += gh.weights(k) * inv_sqrt_pi *
               std::exp(oracle_log_g(panel, panel.first_month + 1, theta, h2) - scale2);
    }
    const double prior = std::exp(-0.5 * h1 * h1 / v) / std::sqrt(2.0 * std::numbers::pi * v);
    dens(i) = prior *
              std::exp(oracle_log_g(panel, panel.first_month, theta, h1) - scale1) *
              inner;
  }

  // Trapezoid CDF and mean.
  post.cdf.setZero(n_grid);
  const double dx = (hi - lo) / (n_grid - 1);
  for (int i = 1; i < n_grid; ++i)
    post.cdf(i) = post.cdf(i - 1) + 0.5 * (dens(i - 1) + dens(i)) * dx;
  const double total = post.cdf(n_grid - 1);
  post.cdf /= total;
  double mean = 0.0;
  for (int i = 1; i < n_grid; ++i)
    mean += 0.5 * (post.grid(i - 1) * dens(i - 1) + post.grid(i) * dens(i)) * dx;
  post.mean = mean / total;
  return post;
}

/// Kolmogorov-Smirnov distance between draws and a reference CDF.
inline double ks_distance(std::vector<double> draws, const PosteriorH1& post) {
  std::sort(draws.begin(), draws.end());
  const double n = static_cast<double>(draws.size());
  double ks = 0.0;
  for (std::size_t i = 0; i < draws.size(); ++i) {
    const double f = post.cdf_at(draws[i]);
    ks = std::max(ks, std::abs(f - static_cast<double>(i) / n));
    ks = std::max(ks, std::abs(f - static_cast<double>(i + 1) / n));
  }
  return ks;
}

}  // namespace frailty::testing

#endif  // FRAILTY_TESTS_QUADRATURE_HPP
