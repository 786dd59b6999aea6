#include "frailty/data_io.hpp"

#include "frailty/rng.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace frailty {

namespace {

using nlohmann::json;

std::string num(double v) { return fmt::format("{:.17g}", v); }

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::string& context) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(fmt::format("{}: cannot parse number '{}'", context, s));
  }
}

constexpr std::uint64_t kGenMacro = 31;
constexpr std::uint64_t kGenFrailty = 32;
constexpr std::uint64_t kGenEntry = 33;
constexpr std::uint64_t kGenInit = 34;
constexpr std::uint64_t kGenFirmCov = 35;
constexpr std::uint64_t kGenDefault = 36;

}  // namespace

// --- Panel CSV ---------------------------------------------------------------

static const char* kPanelHeader =
    "firm_id,month,treasury,sp500,d2d,firm_size,roa,leverage,firm_return,default";

FirmPanel load_panel(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open panel file '{}'", path.string()));
  std::string line;
  if (!std::getline(in, line)) throw Error("panel file is empty");
  if (line != kPanelHeader)
    throw Error(fmt::format("unexpected panel header '{}'", line));

  struct RawRow {
    int month;
    std::array<double, kCovariateDim - 1> values;  // without the constant
    int def;
  };
  std::vector<std::string> firm_order;
  std::map<std::string, std::vector<RawRow>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 10)
      throw Error(fmt::format("line {}: expected 10 fields, got {}", line_no,
                              fields.size()));
    const std::string ctx = fmt::format("line {} (firm {})", line_no, fields[0]);
    RawRow r;
    r.month = static_cast<int>(parse_double(fields[1], ctx));
    for (int j = 0; j < kCovariateDim - 1; ++j) {
      r.values[j] = parse_double(fields[2 + j], ctx);
      if (!std::isfinite(r.values[j]))
        throw Error(fmt::format("{}: missing or non-finite value for '{}'", ctx,
                                kCovariateNames[1 + j]));
    }
    const double d = parse_double(fields[9], ctx);
    if (d != 0.0 && d != 1.0)
      throw Error(fmt::format("{}: default flag must be 0 or 1", ctx));
    r.def = static_cast<int>(d);
    if (rows.find(fields[0]) == rows.end()) firm_order.push_back(fields[0]);
    rows[fields[0]].push_back(r);
  }
  if (firm_order.empty()) throw Error("panel file has no data rows");

  FirmPanel panel;
  int first = rows.begin()->second.front().month, last = first;
  for (const auto& [id, rs] : rows)
    for (const auto& r : rs) {
      first = std::min(first, r.month);
      last = std::max(last, r.month);
    }
  panel.first_month = first;
  panel.last_month = last;
  panel.macro.setConstant(last - first + 1, kMacroCount,
                          std::numeric_limits<double>::quiet_NaN());

  for (const auto& id : firm_order) {
    auto& rs = rows[id];
    std::sort(rs.begin(), rs.end(),
              [](const RawRow& a, const RawRow& b) { return a.month < b.month; });
    FirmRecord rec;
    rec.firm_id = id;
    rec.entry_month = rs.front().month;
    rec.covariates.resize(rs.size(), kCovariateDim);
    rec.defaults.resize(rs.size());
    for (std::size_t t = 0; t < rs.size(); ++t) {
      const auto& r = rs[t];
      if (r.month != rec.entry_month + static_cast<int>(t))
        throw Error(fmt::format("firm {}: month gap before month {}", id, r.month));
      rec.covariates(t, 0) = 1.0;
      for (int j = 0; j < kCovariateDim - 1; ++j) rec.covariates(t, 1 + j) = r.values[j];
      rec.defaults[t] = static_cast<std::uint8_t>(r.def);
      if (r.def == 1 && t + 1 != rs.size())
        throw Error(fmt::format("firm {}: default at month {} is not the exit month", id,
                                r.month));
      for (int m = 0; m < kMacroCount; ++m) {
        double& shared = panel.macro(r.month - first, m);
        if (std::isnan(shared)) {
          shared = r.values[m];
        } else if (shared != r.values[m]) {
          throw Error(fmt::format(
              "firm {}: month {}: macro covariate '{}' is {} but another firm carries {}",
              id, r.month, kCovariateNames[1 + m], r.values[m], shared));
        }
      }
    }
    panel.firms.push_back(std::move(rec));
  }
  panel.validate();
  return panel;
}

void save_panel(const FirmPanel& panel, const std::filesystem::path& path) {
  if (panel.covariate_dim() != kCovariateDim)
    throw Error("save_panel: only the standard 8-column covariate layout is serializable");
  std::ofstream out(path);
  if (!out) throw Error(fmt::format("cannot write panel file '{}'", path.string()));
  out << kPanelHeader << '\n';
  for (const auto& firm : panel.firms)
    for (int t = 0; t < firm.n_months(); ++t) {
      out << firm.firm_id << ',' << firm.entry_month + t;
      for (int j = 1; j < kCovariateDim; ++j) out << ',' << num(firm.covariates(t, j));
      out << ',' << static_cast<int>(firm.defaults[t]) << '\n';
    }
  if (!out) throw Error(fmt::format("failed writing panel file '{}'", path.string()));
}

// --- Synthetic generation ------------------------------------------------------

void GeneratorSpec::validate() const {
  if (n_firms <= 0 || n_months <= 0)
    throw Error("generator: n_firms and n_months must be positive");
  theta_true.validate();
  if (static_cast<int>(firm_covariates.size()) != kCovariateDim - 1 - kMacroCount)
    throw Error(fmt::format("generator: expected {} firm covariate blocks, got {}",
                            kCovariateDim - 1 - kMacroCount, firm_covariates.size()));
  for (const auto& m : macro)
    if (std::abs(m.ar.phi) >= 1.0)
      throw Error("generator: macro dynamics must be stationary (|phi| < 1)");
  if (entry_spread_months < 0 || entry_spread_months >= n_months)
    throw Error("generator: entry_spread_months must lie in [0, n_months)");
}

std::pair<FirmPanel, PanelTruth> generate_synthetic(const GeneratorSpec& spec) {
  spec.validate();
  const int t0 = spec.start_month;
  const int t1 = spec.start_month + spec.n_months - 1;
  const int n_firm_covs = kCovariateDim - 1 - kMacroCount;

  FirmPanel panel;
  panel.first_month = t0;
  panel.last_month = t1;
  panel.macro.resize(spec.n_months, kMacroCount);
  for (int m = 0; m < kMacroCount; ++m) {
    RngStream noise(spec.seed, kGenMacro, static_cast<std::uint64_t>(m));
    double x = spec.macro[m].init;
    for (int t = 0; t < spec.n_months; ++t) {
      panel.macro(t, m) = x;
      x = spec.macro[m].ar.step(x, noise.normal_at(t));
    }
  }

  RngStream frailty_noise(spec.seed, kGenFrailty);
  std::uint64_t fctr = 0;
  FrailtyPath frailty =
      simulate_path(OuParams{spec.theta_true.eta, spec.theta_true.sigma, 1.0}, t0, t1,
                    spec.initial_frailty, [&] { return frailty_noise.normal_at(fctr++); });

  for (int i = 0; i < spec.n_firms; ++i) {
    FirmRecord rec;
    rec.firm_id = fmt::format("F{:05d}", i);
    RngStream entry_rng(spec.seed, kGenEntry, static_cast<std::uint64_t>(i));
    const int entry_offset =
        spec.entry_spread_months > 0
            ? std::min(spec.entry_spread_months,
                       static_cast<int>(entry_rng.uniform_at(0) *
                                        (spec.entry_spread_months + 1)))
            : 0;
    rec.entry_month = t0 + entry_offset;
    const int max_len = t1 - rec.entry_month + 1;

    RngStream init_rng(spec.seed, kGenInit, static_cast<std::uint64_t>(i));
    Vec cov(n_firm_covs);
    for (int j = 0; j < n_firm_covs; ++j)
      cov(j) = spec.firm_covariates[j].init_mean +
               spec.firm_covariates[j].init_sd * init_rng.normal_at(j);

    RngStream cov_rng(spec.seed, kGenFirmCov, static_cast<std::uint64_t>(i));
    RngStream def_rng(spec.seed, kGenDefault, static_cast<std::uint64_t>(i));

    Mat zrows(max_len, kCovariateDim);
    std::vector<std::uint8_t> defs;
    int len = 0;
    for (int t = 0; t < max_len; ++t) {
      const int month = rec.entry_month + t;
      zrows(t, 0) = 1.0;
      for (int m = 0; m < kMacroCount; ++m) zrows(t, 1 + m) = panel.macro(month - t0, m);
      for (int j = 0; j < n_firm_covs; ++j) zrows(t, 1 + kMacroCount + j) = cov(j);

      const double exponent = spec.theta_true.kappa.dot(zrows.row(t)) +
                              spec.theta_true.xi * frailty.at(month);
      const double p_def = -std::expm1(-std::exp(exponent));
      const bool defaulted = def_rng.uniform_at(t) < p_def;
      defs.push_back(defaulted ? 1 : 0);
      ++len;
      if (defaulted) break;

      for (int j = 0; j < n_firm_covs; ++j)
        cov(j) = spec.firm_covariates[j].ar.step(
            cov(j), cov_rng.normal_at(static_cast<std::uint64_t>(t) * n_firm_covs + j));
    }
    rec.covariates = zrows.topRows(len);
    rec.defaults = std::move(defs);
    panel.firms.push_back(std::move(rec));
  }

  panel.validate();
  return {std::move(panel), PanelTruth{spec.theta_true, std::move(frailty)}};
}

// --- Config ---------------------------------------------------------------------

namespace {

[[noreturn]] void config_error(const std::string& where, const std::string& what) {
  throw Error(fmt::format("config error at {}: {}", where, what));
}

template <class T>
T get_or(const json& j, const std::string& key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    config_error(where + "/" + key, e.what());
  }
}

template <class T>
T require(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) config_error(where, "missing required key '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    config_error(where + "/" + key, e.what());
  }
}

Ar1 parse_ar1(const json& j, const std::string& where) {
  Ar1 m;
  m.intercept = get_or<double>(j, "intercept", 0.0, where);
  m.phi = require<double>(j, "phi", where);
  m.innovation_sd = get_or<double>(j, "sd", 0.0, where);
  if (m.innovation_sd < 0.0) config_error(where, "sd must be >= 0");
  return m;
}

PriorSpec parse_prior(const json& j, std::vector<std::string>& warnings) {
  const std::string type = require<std::string>(j, "type", "/prior");
  if (type == "uniform") return PriorSpec::Uniform();
  if (type != "gaussian") config_error("/prior/type", "expected 'uniform' or 'gaussian'");

  const auto mu_raw = require<std::vector<double>>(j, "mu", "/prior");
  const auto sigma_raw = require<std::vector<std::vector<double>>>(j, "sigma", "/prior");
  const int n = static_cast<int>(mu_raw.size());
  if (n != kCovariateDim + 1)
    config_error("/prior/mu", fmt::format("expected dimension {}", kCovariateDim + 1));
  Mat sigma(n, n);
  if (static_cast<int>(sigma_raw.size()) != n)
    config_error("/prior/sigma", fmt::format("expected {} rows", n));
  for (int r = 0; r < n; ++r) {
    if (static_cast<int>(sigma_raw[r].size()) != n)
      config_error(fmt::format("/prior/sigma/{}", r), fmt::format("expected {} columns", n));
    for (int c = 0; c < n; ++c) sigma(r, c) = sigma_raw[r][c];
  }

  // Symmetrize, warning when the printed matrix disagrees across the diagonal.
  const double asym = (sigma - sigma.transpose()).cwiseAbs().maxCoeff();
  if (asym > 0.0) {
    sigma = ((sigma + sigma.transpose()) / 2.0).eval();
    warnings.push_back(fmt::format(
        "prior sigma is not symmetric (max deviation {:.3g}); symmetrized as (S+S')/2",
        asym));
  }

  const std::string repair = get_or<std::string>(j, "spd_repair", "none", "/prior");
  if (repair != "none" && repair != "clip")
    config_error("/prior/spd_repair", "expected 'none' or 'clip'");
  if (repair == "clip") {
    Eigen::SelfAdjointEigenSolver<Mat> eig(sigma);
    const double min_eig = eig.eigenvalues().minCoeff();
    const double floor = 1e-6 * eig.eigenvalues().maxCoeff();
    if (min_eig < floor) {
      Vec clipped = eig.eigenvalues().cwiseMax(floor);
      sigma = eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
      sigma = ((sigma + sigma.transpose()) / 2.0).eval();
      warnings.push_back(fmt::format(
          "prior sigma is not positive definite (min eigenvalue {:.3g}); eigenvalues "
          "clipped to {:.3g}",
          min_eig, floor));
    }
  }

  Vec mu(n);
  for (int i = 0; i < n; ++i) mu(i) = mu_raw[i];

  // Optional slot order: names of the model parameters in the order the
  // printed mu/sigma list them; permuted here into the model order
  // (covariates, then xi).
  if (j.contains("slot_order")) {
    const auto order = require<std::vector<std::string>>(j, "slot_order", "/prior");
    if (static_cast<int>(order.size()) != n)
      config_error("/prior/slot_order", fmt::format("expected {} names", n));
    std::vector<int> perm(n, -1);
    for (int i = 0; i < n; ++i) {
      int target = -1;
      if (order[i] == "xi") {
        target = n - 1;
      } else {
        for (int c = 0; c < kCovariateDim; ++c)
          if (order[i] == kCovariateNames[c]) target = c;
      }
      if (target < 0)
        config_error("/prior/slot_order", fmt::format("unknown parameter '{}'", order[i]));
      if (perm[i] >= 0 || std::count(perm.begin(), perm.end(), target) > 0)
        config_error("/prior/slot_order", fmt::format("duplicate parameter '{}'", order[i]));
      perm[i] = target;
    }
    Vec mu_std(n);
    Mat sigma_std(n, n);
    for (int i = 0; i < n; ++i) {
      mu_std(perm[i]) = mu(i);
      for (int k = 0; k < n; ++k) sigma_std(perm[i], perm[k]) = sigma(i, k);
    }
    mu = mu_std;
    sigma = sigma_std;
  }

  try {
    return PriorSpec::Gaussian(std::move(mu), std::move(sigma));
  } catch (const Error& e) {
    config_error("/prior/sigma", e.what());
  }
}

}  // namespace

RunConfig load_config(const std::filesystem::path& path, bool check_files) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open config file '{}'", path.string()));
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(fmt::format("config error: {}", e.what()));
  }

  RunConfig cfg;
  cfg.seed = get_or<std::uint64_t>(j, "seed", 0, "/");
  cfg.threads = get_or<int>(j, "threads", 0, "/");

  if (j.contains("prior")) cfg.prior = parse_prior(j.at("prior"), cfg.warnings);

  if (j.contains("smc")) {
    const auto& s = j.at("smc");
    cfg.smc.n_particles = get_or<int>(s, "n_particles", cfg.smc.n_particles, "/smc");
    if (cfg.smc.n_particles < 2) config_error("/smc/n_particles", "must be >= 2");
    const std::string res =
        get_or<std::string>(s, "resampling", "multinomial", "/smc");
    if (res == "multinomial")
      cfg.smc.resampling = Resampling::multinomial;
    else if (res == "systematic")
      cfg.smc.resampling = Resampling::systematic;
    else
      config_error("/smc/resampling", "expected 'multinomial' or 'systematic'");
    const std::string init =
        get_or<std::string>(s, "initial_law", "point_mass", "/smc");
    if (init == "point_mass")
      cfg.smc.initial_law = FrailtyInitialLaw::mean_zero_step;
    else if (init == "stationary")
      cfg.smc.initial_law = FrailtyInitialLaw::stationary;
    else
      config_error("/smc/initial_law", "expected 'point_mass' or 'stationary'");
  }
  cfg.smc.seed = cfg.seed;

  if (j.contains("pimh")) {
    const auto& p = j.at("pimh");
    cfg.pimh.k_iterations = get_or<int>(p, "iterations", cfg.pimh.k_iterations, "/pimh");
    cfg.pimh.burn_in = get_or<int>(p, "burn_in", cfg.pimh.burn_in, "/pimh");
    cfg.pimh.thin = get_or<int>(p, "thin", cfg.pimh.thin, "/pimh");
    if (cfg.pimh.thin < 1) config_error("/pimh/thin", "must be >= 1");
  }
  cfg.pimh.smc = cfg.smc;
  cfg.pimh.seed = cfg.seed;

  if (j.contains("em")) {
    const auto& e = j.at("em");
    cfg.em.n_paths_per_iter =
        get_or<int>(e, "n_paths_per_iter", cfg.em.n_paths_per_iter, "/em");
    cfg.em.max_iters = get_or<int>(e, "max_iters", cfg.em.max_iters, "/em");
    cfg.em.tol = get_or<double>(e, "tol", cfg.em.tol, "/em");
    if (cfg.em.n_paths_per_iter < 1) config_error("/em/n_paths_per_iter", "must be >= 1");
    if (!(cfg.em.tol > 0.0)) config_error("/em/tol", "must be > 0");
    if (e.contains("fix_sigma") && !e.at("fix_sigma").is_null())
      cfg.em.fix_sigma = require<double>(e, "fix_sigma", "/em");
    if (e.contains("optimizer")) {
      const auto& o = e.at("optimizer");
      cfg.em.optimizer.max_evals =
          get_or<int>(o, "max_evals", cfg.em.optimizer.max_evals, "/em/optimizer");
      cfg.em.optimizer.grad_tol =
          get_or<double>(o, "grad_tol", cfg.em.optimizer.grad_tol, "/em/optimizer");
    }
  }
  cfg.em.pimh = cfg.pimh;
  cfg.em.seed = cfg.seed;

  if (j.contains("forecast")) {
    const auto& f = j.at("forecast");
    cfg.forecast.n_draws = get_or<int>(f, "n_draws", cfg.forecast.n_draws, "/forecast");
    cfg.forecast.stochastic_covariates = get_or<bool>(
        f, "stochastic_covariates", cfg.forecast.stochastic_covariates, "/forecast");
    cfg.forecast_tau_max = get_or<int>(f, "tau_max", cfg.forecast_tau_max, "/forecast");
    if (cfg.forecast.n_draws < 1) config_error("/forecast/n_draws", "must be >= 1");
  }

  if (j.contains("backtest")) {
    const auto& b = j.at("backtest");
    cfg.backtest.train_start_year = require<int>(b, "train_start_year", "/backtest");
    cfg.backtest.train_end_year = require<int>(b, "train_end_year", "/backtest");
    cfg.backtest.eval_start_year = require<int>(b, "eval_start_year", "/backtest");
    cfg.backtest.eval_end_year = require<int>(b, "eval_end_year", "/backtest");
    cfg.backtest.horizons_years = get_or<std::vector<int>>(
        b, "horizons_years", cfg.backtest.horizons_years, "/backtest");
    cfg.backtest.include_logistic =
        get_or<bool>(b, "include_logistic", true, "/backtest");
    const auto models =
        get_or<std::vector<std::string>>(b, "models", {"gaussian"}, "/backtest");
    for (const auto& name : models) {
      if (name == "uniform") {
        cfg.backtest.models.push_back({"uniform", PriorSpec::Uniform()});
      } else if (name == "gaussian") {
        if (cfg.prior.is_uniform())
          config_error("/backtest/models",
                       "model 'gaussian' requires a gaussian prior block");
        cfg.backtest.models.push_back({"gaussian", cfg.prior});
      } else {
        config_error("/backtest/models",
                     fmt::format("unknown model '{}' (expected 'uniform' or 'gaussian')",
                                 name));
      }
    }
  }
  cfg.backtest.em = cfg.em;
  cfg.backtest.forecast = cfg.forecast;
  cfg.backtest.seed = cfg.seed;

  if (j.contains("simulate")) {
    const auto& s = j.at("simulate");
    GeneratorSpec& g = cfg.generator;
    g.n_firms = require<int>(s, "n_firms", "/simulate");
    g.n_months = require<int>(s, "n_months", "/simulate");
    g.start_month = s.contains("start_year")
                        ? month_of_january(require<int>(s, "start_year", "/simulate"))
                        : get_or<int>(s, "start_month", 0, "/simulate");
    const auto& th = s.at("theta_true");
    const auto kappa = require<std::vector<double>>(th, "kappa", "/simulate/theta_true");
    if (static_cast<int>(kappa.size()) != kCovariateDim)
      config_error("/simulate/theta_true/kappa",
                   fmt::format("expected dimension {}", kCovariateDim));
    g.theta_true.kappa = Eigen::Map<const Vec>(kappa.data(), kappa.size());
    g.theta_true.xi = require<double>(th, "xi", "/simulate/theta_true");
    g.theta_true.eta = require<double>(th, "eta", "/simulate/theta_true");
    g.theta_true.sigma = require<double>(th, "sigma", "/simulate/theta_true");
    const auto macro = require<std::vector<json>>(s, "macro", "/simulate");
    if (static_cast<int>(macro.size()) != kMacroCount)
      config_error("/simulate/macro", fmt::format("expected {} blocks", kMacroCount));
    for (int m = 0; m < kMacroCount; ++m) {
      const std::string where = fmt::format("/simulate/macro/{}", m);
      g.macro[m].ar = parse_ar1(macro[m], where);
      g.macro[m].init = get_or<double>(macro[m], "init", 0.0, where);
    }
    const auto firm =
        require<std::vector<json>>(s, "firm_covariates", "/simulate");
    if (static_cast<int>(firm.size()) != kCovariateDim - 1 - kMacroCount)
      config_error("/simulate/firm_covariates",
                   fmt::format("expected {} blocks", kCovariateDim - 1 - kMacroCount));
    g.firm_covariates.clear();
    for (std::size_t i = 0; i < firm.size(); ++i) {
      const std::string where = fmt::format("/simulate/firm_covariates/{}", i);
      CovariateDynamics d;
      d.ar = parse_ar1(firm[i], where);
      d.init_mean = get_or<double>(firm[i], "init_mean", 0.0, where);
      d.init_sd = get_or<double>(firm[i], "init_sd", 0.0, where);
      if (d.init_sd < 0.0) config_error(where, "init_sd must be >= 0");
      g.firm_covariates.push_back(d);
    }
    g.entry_spread_months =
        get_or<int>(s, "entry_spread_months", 0, "/simulate");
    g.initial_frailty = get_or<double>(s, "initial_frailty", 0.0, "/simulate");
    g.seed = get_or<std::uint64_t>(s, "seed", cfg.seed, "/simulate");
    try {
      g.validate();
    } catch (const Error& e) {
      config_error("/simulate", e.what());
    }
  }

  if (j.contains("paths")) {
    const auto& p = j.at("paths");
    auto resolve = [&](const char* key) -> std::filesystem::path {
      std::filesystem::path fp = require<std::string>(p, key, "/paths");
      if (fp.is_relative()) fp = path.parent_path() / fp;
      if (check_files && !std::filesystem::exists(fp))
        config_error(fmt::format("/paths/{}", key),
                     fmt::format("referenced file '{}' does not exist", fp.string()));
      return fp;
    };
    if (p.contains("panel")) cfg.panel_path = resolve("panel");
    if (p.contains("fit_report")) cfg.fit_report_path = resolve("fit_report");
    if (p.contains("scores")) cfg.scores_path = resolve("scores");
  }
  return cfg;
}

// --- Reports -------------------------------------------------------------------

static const char* kFitHeader =
    "predictor,coefficient,std_error,t_statistic,ci95_lower,ci95_upper";
static const char* kObsFooter = "No. of firm-month observations";
static const char* kLoglikFooter = "Log-likelihood";

void save_fit_report(const ThetaEstimate& est, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(fmt::format("cannot write fit report '{}'", path.string()));
  out << kFitHeader << '\n';
  for (std::size_t i = 0; i < est.param_names.size(); ++i)
    out << est.param_names[i] << ',' << num(est.estimates(i)) << ',' << num(est.se(i))
        << ',' << num(est.t_stats(i)) << ',' << num(est.ci_lower(i)) << ','
        << num(est.ci_upper(i)) << '\n';
  out << kObsFooter << ',' << est.n_observations << '\n';
  out << kLoglikFooter << ',' << num(est.loglik) << '\n';
}

FitReport parse_fit_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open fit report '{}'", path.string()));
  std::string line;
  if (!std::getline(in, line) || line != kFitHeader)
    throw Error("fit report: unexpected header");
  FitReport rep;
  std::vector<std::array<double, 5>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields[0] == kObsFooter) {
      rep.n_observations = static_cast<std::int64_t>(parse_double(fields.at(1), "fit report"));
      continue;
    }
    if (fields[0] == kLoglikFooter) {
      rep.loglik = parse_double(fields.at(1), "fit report");
      continue;
    }
    if (fields.size() != 6)
      throw Error(fmt::format("fit report: expected 6 fields, got {}", fields.size()));
    rep.param_names.push_back(fields[0]);
    rows.push_back({parse_double(fields[1], "fit report"),
                    parse_double(fields[2], "fit report"),
                    parse_double(fields[3], "fit report"),
                    parse_double(fields[4], "fit report"),
                    parse_double(fields[5], "fit report")});
  }
  const int n = static_cast<int>(rows.size());
  rep.estimates.resize(n);
  rep.se.resize(n);
  rep.t_stats.resize(n);
  rep.ci_lower.resize(n);
  rep.ci_upper.resize(n);
  for (int i = 0; i < n; ++i) {
    rep.estimates(i) = rows[i][0];
    rep.se(i) = rows[i][1];
    rep.t_stats(i) = rows[i][2];
    rep.ci_lower(i) = rows[i][3];
    rep.ci_upper(i) = rows[i][4];
  }
  return rep;
}

Theta FitReport::to_theta() const {
  Theta theta;
  std::vector<double> kappa;
  theta.sigma = 1.0;
  bool saw_sigma = false;
  for (std::size_t i = 0; i < param_names.size(); ++i) {
    const auto& name = param_names[i];
    if (name == "xi") {
      theta.xi = estimates(i);
    } else if (name == "eta") {
      theta.eta = estimates(i);
    } else if (name == "sigma") {
      theta.sigma = estimates(i);
      saw_sigma = true;
    } else {
      kappa.push_back(estimates(i));
    }
  }
  if (!saw_sigma) theta.sigma = 1.0;
  theta.kappa = Eigen::Map<const Vec>(kappa.data(), kappa.size());
  theta.validate();
  return theta;
}

namespace {
std::string display_label(const std::string& name) {
  if (name == "constant") return "Constant";
  if (name == "treasury") return "TREASURY RATE";
  if (name == "sp500") return "SP500";
  if (name == "d2d") return "D2D";
  if (name == "firm_size") return "FIRM SIZE";
  if (name == "roa") return "ROA";
  if (name == "leverage") return "LEVERAGE";
  if (name == "firm_return") return "FIRM RETURN";
  if (name == "xi") return "Hidden-factor volatility";
  if (name == "eta") return "Hidden-factor mean reversion";
  if (name == "sigma") return "Brownian motion volatility";
  return name;
}
}  // namespace

void save_fit_table(const ThetaEstimate& est, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(fmt::format("cannot write fit table '{}'", path.string()));
  out << fmt::format("{:<32}{:>12}{:>16}{:>14}{:>14}{:>14}\n", "Predictor", "Coefficient",
                     "Asymptotic SE", "t-Statistic", "95% CI Lower", "95% CI Upper");
  auto row = [&](std::size_t i) {
    out << fmt::format("{:<32}{:>12.4f}{:>16.4f}{:>14.2f}{:>14.4f}{:>14.4f}\n",
                       "  " + display_label(est.param_names[i]), est.estimates(i),
                       est.se(i), est.t_stats(i), est.ci_lower(i), est.ci_upper(i));
  };
  out << "Macroeconomic covariates:\n";
  for (std::size_t i = 0; i < est.param_names.size(); ++i)
    if (est.param_names[i] == "constant" || est.param_names[i] == "treasury" ||
        est.param_names[i] == "sp500")
      row(i);
  out << "Firm-specific covariates:\n";
  for (std::size_t i = 0; i < est.param_names.size(); ++i)
    if (est.param_names[i] == "d2d" || est.param_names[i] == "firm_size" ||
        est.param_names[i] == "roa" || est.param_names[i] == "leverage" ||
        est.param_names[i] == "firm_return")
      row(i);
  out << "Frailty effect:\n";
  for (std::size_t i = 0; i < est.param_names.size(); ++i)
    if (est.param_names[i] == "xi" || est.param_names[i] == "eta" ||
        est.param_names[i] == "sigma")
      row(i);
  out << fmt::format("{:<32}{}\n", kObsFooter, est.n_observations);
  out << fmt::format("{:<32}{:.2f}\n", kLoglikFooter, est.loglik);
}

void save_backtest_report(const BacktestReport& report,
                          const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(fmt::format("cannot write backtest report '{}'", path.string()));
  out << "model,horizon_years,cohort_year,ar,n_firms,n_defaults\n";
  for (const auto& row : report.rows) {
    for (const auto& cell : row.cells) {
      out << row.model << ',' << row.horizon_years << ',' << cell.report_year << ',';
      if (cell.ar) out << num(*cell.ar);
      out << ',' << cell.n_firms << ',' << cell.n_defaults << '\n';
    }
    out << row.model << ',' << row.horizon_years << ",average,";
    if (row.average) out << num(*row.average);
    out << ",,\n";
  }
}

void save_backtest_table(const BacktestReport& report,
                         const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(fmt::format("cannot write backtest table '{}'", path.string()));
  if (report.rows.empty()) return;

  int first_year = report.rows.front().cells.front().report_year;
  int last_year = first_year;
  for (const auto& row : report.rows)
    for (const auto& cell : row.cells) {
      first_year = std::min(first_year, cell.report_year);
      last_year = std::max(last_year, cell.report_year);
    }

  out << fmt::format("{:<24}{:>9}", "", "T (Year)");
  for (int y = first_year; y <= last_year; ++y) out << fmt::format("{:>9}", y);
  out << fmt::format("{:>9}\n", "Average");

  std::string current_model;
  for (const auto& row : report.rows) {
    const bool first_of_model = row.model != current_model;
    current_model = row.model;
    out << fmt::format("{:<24}{:>9}", first_of_model ? row.model : "", row.horizon_years);
    for (int y = first_year; y <= last_year; ++y) {
      const auto it = std::find_if(row.cells.begin(), row.cells.end(),
                                   [&](const BacktestCell& c) { return c.report_year == y; });
      if (it == row.cells.end() || !it->ar)
        out << fmt::format("{:>9}", "");
      else
        out << fmt::format("{:>9.2f}", 100.0 * *it->ar);
    }
    if (row.average)
      out << fmt::format("{:>9.2f}", 100.0 * *row.average);
    out << '\n';
  }
}

void save_pd_table(const std::vector<PdTermStructure>& terms,
                   const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(fmt::format("cannot write PD table '{}'", path.string()));
  out << "firm_id,horizon,pd\n";
  for (const auto& ts : terms)
    for (int tau = 1; tau <= ts.pd.size(); ++tau)
      out << ts.firm_id << ',' << tau << ',' << num(ts.pd(tau - 1)) << '\n';
}

void save_cap_curve(const std::vector<std::pair<double, double>>& curve,
                    const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(fmt::format("cannot write CAP curve '{}'", path.string()));
  out << "x,y\n";
  for (const auto& [x, y] : curve) out << num(x) << ',' << num(y) << '\n';
}

void save_truth(const PanelTruth& truth, const std::filesystem::path& path) {
  json j;
  j["theta"]["kappa"] = std::vector<double>(truth.theta.kappa.data(),
                                            truth.theta.kappa.data() +
                                                truth.theta.kappa.size());
  j["theta"]["xi"] = truth.theta.xi;
  j["theta"]["eta"] = truth.theta.eta;
  j["theta"]["sigma"] = truth.theta.sigma;
  j["frailty"]["start_month"] = truth.frailty.start_month;
  j["frailty"]["h"] =
      std::vector<double>(truth.frailty.h.data(),
                          truth.frailty.h.data() + truth.frailty.h.size());
  std::ofstream out(path);
  if (!out) throw Error(fmt::format("cannot write truth file '{}'", path.string()));
  out << j.dump(2) << '\n';
}

ScoredCohort load_scores(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open scores file '{}'", path.string()));
  std::string line;
  if (!std::getline(in, line) || line != "firm_id,score,label")
    throw Error("scores file: expected header 'firm_id,score,label'");
  ScoredCohort cohort;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 3)
      throw Error(fmt::format("scores line {}: expected 3 fields", line_no));
    const double label = parse_double(fields[2], fmt::format("scores line {}", line_no));
    if (label != 0.0 && label != 1.0)
      throw Error(fmt::format("scores line {}: label must be 0 or 1", line_no));
    cohort.entries.push_back(
        {fields[0], parse_double(fields[1], fmt::format("scores line {}", line_no)),
         static_cast<int>(label)});
  }
  return cohort;
}

}  // namespace frailty
