#include "frailty/types.hpp"

#include <fmt/format.h>

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace frailty {

std::int64_t FirmPanel::n_cells() const {
  std::int64_t n = 0;
  for (const auto& f : firms) n += f.n_months();
  return n;
}

std::int64_t FirmPanel::n_defaults() const {
  std::int64_t n = 0;
  for (const auto& f : firms) n += f.defaulted() ? 1 : 0;
  return n;
}

void FirmPanel::validate() const {
  const int dim = covariate_dim();
  for (const auto& f : firms) {
    if (f.n_months() <= 0)
      throw Error(fmt::format("firm {}: empty record", f.firm_id));
    if (static_cast<int>(f.defaults.size()) != f.n_months())
      throw Error(fmt::format("firm {}: {} default flags for {} months", f.firm_id,
                              f.defaults.size(), f.n_months()));
    if (f.covariates.cols() != dim)
      throw Error(fmt::format("firm {}: covariate dimension {} != {}", f.firm_id,
                              f.covariates.cols(), dim));
    if (f.entry_month < first_month || f.exit_month() > last_month)
      throw Error(fmt::format("firm {}: months [{}, {}] outside panel range [{}, {}]",
                              f.firm_id, f.entry_month, f.exit_month(), first_month,
                              last_month));
    for (int t = 0; t < f.n_months(); ++t) {
      const int month = f.entry_month + t;
      if (f.covariates(t, 0) != 1.0)
        throw Error(fmt::format("firm {}: month {}: constant column is {}, expected 1",
                                f.firm_id, month, f.covariates(t, 0)));
      for (int j = 0; j < dim; ++j)
        if (!std::isfinite(f.covariates(t, j)))
          throw Error(fmt::format("firm {}: month {}: covariate '{}' is not finite",
                                  f.firm_id, month,
                                  j < kCovariateDim ? std::string(kCovariateNames[j])
                                                    : std::to_string(j)));
      if (f.defaults[t] > 1)
        throw Error(fmt::format("firm {}: month {}: default flag must be 0/1", f.firm_id,
                                month));
      if (f.defaults[t] == 1 && t != f.n_months() - 1)
        throw Error(fmt::format(
            "firm {}: default at month {} does not terminate the record", f.firm_id,
            month));
      if (macro.rows() == n_months() && dim >= 1 + kMacroCount) {
        for (int m = 0; m < kMacroCount; ++m) {
          const double shared = macro(month - first_month, m);
          if (std::isfinite(shared) && f.covariates(t, 1 + m) != shared)
            throw Error(fmt::format(
                "firm {}: month {}: macro covariate '{}' is {} but the shared series "
                "has {}",
                f.firm_id, month, kCovariateNames[1 + m], f.covariates(t, 1 + m),
                shared));
        }
      }
    }
  }
}

void Theta::validate() const {
  if (!kappa.allFinite()) throw Error("theta: kappa has non-finite entries");
  if (!(xi >= 0.0) || !std::isfinite(xi)) throw Error("theta: xi must be finite and >= 0");
  if (!(eta >= 0.0) || !std::isfinite(eta))
    throw Error("theta: eta must be finite and >= 0");
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw Error("theta: sigma must be finite and > 0");
}

PriorSpec PriorSpec::Gaussian(Vec mu, Mat sigma) {
  if (sigma.rows() != sigma.cols() || sigma.rows() != mu.size())
    throw Error(fmt::format("gaussian prior: mu has dim {} but sigma is {}x{}", mu.size(),
                            sigma.rows(), sigma.cols()));
  Eigen::LLT<Mat> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw Error("prior covariance not positive definite");
  PriorSpec p;
  p.kind = Kind::gaussian;
  p.gaussian = GaussianPrior{std::move(mu), std::move(sigma)};
  return p;
}

FirmPanel slice_panel(const FirmPanel& panel, int t0, int t1) {
  if (t0 > t1) throw Error(fmt::format("slice_panel: empty window [{}, {}]", t0, t1));
  t0 = std::max(t0, panel.first_month);
  t1 = std::min(t1, panel.last_month);
  FirmPanel out;
  out.first_month = t0;
  out.last_month = t1;
  out.macro = panel.macro.middleRows(t0 - panel.first_month, t1 - t0 + 1);
  for (const auto& f : panel.firms) {
    const int a = std::max(f.entry_month, t0);
    const int b = std::min(f.exit_month(), t1);
    if (a > b) continue;
    FirmRecord r;
    r.firm_id = f.firm_id;
    r.entry_month = a;
    r.covariates = f.covariates.middleRows(a - f.entry_month, b - a + 1);
    r.defaults.assign(f.defaults.begin() + (a - f.entry_month),
                      f.defaults.begin() + (b - f.entry_month + 1));
    // A default after the window end is censored away.
    out.firms.push_back(std::move(r));
  }
  return out;
}

FirmPanel subset_panel(const FirmPanel& panel, const std::vector<std::string>& ids) {
  std::unordered_set<std::string> keep(ids.begin(), ids.end());
  FirmPanel out;
  out.first_month = panel.first_month;
  out.last_month = panel.last_month;
  out.macro = panel.macro;
  for (const auto& f : panel.firms)
    if (keep.count(f.firm_id)) out.firms.push_back(f);
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace frailty
