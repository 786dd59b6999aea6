#ifndef FRAILTY_TESTS_FIXTURES_HPP
#define FRAILTY_TESTS_FIXTURES_HPP

#include "frailty/rng.hpp"
#include "frailty/types.hpp"

#include <fmt/format.h>

#include <cmath>
#include <initializer_list>
#include <limits>
#include <vector>

namespace frailty::testing {

inline Vec vec(std::initializer_list<double> values) {
  Vec v(static_cast<int>(values.size()));
  int i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

/// Covariate row with the leading constant: row({a, b, ...}) -> (1, a, b, ...).
inline Vec row(std::initializer_list<double> rest) {
  Vec v(static_cast<int>(rest.size()) + 1);
  v(0) = 1.0;
  int i = 1;
  for (double x : rest) v(i++) = x;
  return v;
}

struct FirmSpec {
  int entry_month = 0;
  std::vector<Vec> rows;
  std::vector<int> defaults;
};

/// Builds a validated panel from per-firm rows; the macro series is lifted
/// from covariate columns 1..2 of whichever firm observes each month.
inline FirmPanel make_panel(const std::vector<FirmSpec>& specs) {
  FirmPanel panel;
  if (specs.empty()) throw Error("make_panel: no firms");
  panel.first_month = specs[0].entry_month;
  panel.last_month = specs[0].entry_month - 1;
  for (const auto& s : specs) {
    panel.first_month = std::min(panel.first_month, s.entry_month);
    panel.last_month = std::max(
        panel.last_month, s.entry_month + static_cast<int>(s.rows.size()) - 1);
  }
  panel.macro.setConstant(panel.n_months(), kMacroCount,
                          std::numeric_limits<double>::quiet_NaN());
  int idx = 0;
  for (const auto& s : specs) {
    FirmRecord rec;
    rec.firm_id = fmt::format("T{:03d}", idx++);
    rec.entry_month = s.entry_month;
    rec.covariates.resize(s.rows.size(), s.rows.at(0).size());
    rec.defaults.assign(s.defaults.begin(), s.defaults.end());
    for (std::size_t t = 0; t < s.rows.size(); ++t) {
      rec.covariates.row(t) = s.rows[t].transpose();
      for (int m = 0; m < kMacroCount; ++m)
        panel.macro(s.entry_month + static_cast<int>(t) - panel.first_month, m) =
            s.rows[t](1 + m);
    }
    panel.firms.push_back(std::move(rec));
  }
  panel.validate();
  return panel;
}

/// Small random panel: every firm observed over the full window, defaults
/// drawn per cell with the given probability (terminating the record).
inline FirmPanel random_panel(int n_firms, int n_months, std::uint64_t seed,
                              double default_prob = 0.08, int dim = kCovariateDim) {
  std::vector<FirmSpec> specs;
  RngStream macro_rng(seed, 901);
  std::vector<Vec> macro(n_months);
  for (int t = 0; t < n_months; ++t) {
    macro[t] = Vec(kMacroCount);
    for (int m = 0; m < kMacroCount; ++m)
      macro[t](m) = macro_rng.normal_at(t * kMacroCount + m);
  }
  for (int i = 0; i < n_firms; ++i) {
    RngStream rng(seed, 902, static_cast<std::uint64_t>(i));
    FirmSpec s;
    std::uint64_t c = 0;
    for (int t = 0; t < n_months; ++t) {
      Vec z(dim);
      z(0) = 1.0;
      for (int m = 0; m < kMacroCount; ++m) z(1 + m) = macro[t](m);
      for (int j = 1 + kMacroCount; j < dim; ++j) z(j) = rng.normal_at(c++);
      s.rows.push_back(z);
      const bool def = rng.uniform_at(1000000 + t) < default_prob;
      s.defaults.push_back(def ? 1 : 0);
      if (def) break;
    }
    specs.push_back(std::move(s));
  }
  return make_panel(specs);
}

/// Frailty path over the panel window with N(0,1) entries.
inline FrailtyPath random_path(const FirmPanel& panel, std::uint64_t seed) {
  FrailtyPath path;
  path.start_month = panel.first_month;
  path.h.resize(panel.n_months());
  RngStream rng(seed, 903);
  for (int t = 0; t < panel.n_months(); ++t) path.h(t) = rng.normal_at(t);
  return path;
}

inline Theta random_theta(int dim, std::uint64_t seed, double scale = 0.3) {
  RngStream rng(seed, 904);
  Theta theta;
  theta.kappa.resize(dim);
  for (int j = 0; j < dim; ++j) theta.kappa(j) = scale * rng.normal_at(j);
  theta.kappa(0) -= 2.0;  // keep intensities small
  theta.xi = 0.2 + 0.1 * std::abs(rng.normal_at(100));
  theta.eta = 0.3;
  theta.sigma = 0.8;
  return theta;
}

}  // namespace frailty::testing

#endif  // FRAILTY_TESTS_FIXTURES_HPP
