#include "frailty/evaluation.hpp"

#include "frailty/parallel.hpp"

#include <fmt/format.h>

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace frailty {

double ScoredCohort::default_rate() const {
  if (entries.empty()) return 0.0;
  double d = 0.0;
  for (const auto& e : entries) d += e.label;
  return d / static_cast<double>(entries.size());
}

std::vector<std::pair<double, double>> cap_curve(const ScoredCohort& cohort) {
  const auto& entries = cohort.entries;
  if (entries.empty()) throw Error("cap_curve: empty cohort");
  const double n_total = static_cast<double>(entries.size());
  double n_def = 0.0;
  for (const auto& e : entries) n_def += e.label;

  std::vector<int> order(entries.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return entries[a].score > entries[b].score;
  });

  std::vector<std::pair<double, double>> curve;
  curve.emplace_back(0.0, 0.0);
  std::size_t i = 0;
  double def_so_far = 0.0;
  while (i < order.size()) {
    // Consume one tie group as a single linear segment.
    std::size_t j = i;
    while (j < order.size() && entries[order[j]].score == entries[order[i]].score) {
      def_so_far += entries[order[j]].label;
      ++j;
    }
    const double x = j == order.size() ? 1.0 : static_cast<double>(j) / n_total;
    const double y =
        n_def > 0.0 ? (def_so_far == n_def ? 1.0 : def_so_far / n_def) : 0.0;
    curve.emplace_back(x, y);
    i = j;
  }
  return curve;
}

double accuracy_ratio(const std::vector<std::pair<double, double>>& curve,
                      double default_rate) {
  if (!(default_rate > 0.0) || !(default_rate < 1.0)) throw Error("AR undefined");
  if (curve.size() < 2) throw Error("accuracy_ratio: degenerate curve");
  double auc = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    const auto& [x0, y0] = curve[i - 1];
    const auto& [x1, y1] = curve[i];
    auc += 0.5 * (y0 + y1) * (x1 - x0);
  }
  return (auc - 0.5) / ((1.0 - default_rate) / 2.0);
}

double accuracy_ratio(const ScoredCohort& cohort) {
  const auto& entries = cohort.entries;
  const std::int64_t n = static_cast<std::int64_t>(entries.size());
  std::int64_t d = 0;
  for (const auto& e : entries) d += e.label;
  if (d == 0 || d == n) throw Error("AR undefined");

  std::vector<int> order(entries.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return entries[a].score > entries[b].score;
  });

  // Twice the area between the CAP and the diagonal, scaled by n^2 d, is the
  // integer sum_segments dk (n (c0 + c1) - d (k0 + k1)) over tie-group
  // vertices (k/n, c/d); AR divides it by n d (n - d).
  std::int64_t num = 0;
  std::int64_t k0 = 0, c0 = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    std::int64_t c1 = c0;
    while (j < order.size() && entries[order[j]].score == entries[order[i]].score) {
      c1 += entries[order[j]].label;
      ++j;
    }
    const std::int64_t k1 = static_cast<std::int64_t>(j);
    num += (k1 - k0) * (n * (c0 + c1) - d * (k0 + k1));
    k0 = k1;
    c0 = c1;
    i = j;
  }
  return static_cast<double>(num) / static_cast<double>(n * d * (n - d));
}

double LogisticModel::monthly_pd(Eigen::Ref<const Vec> z) const {
  const double eta = beta.dot(z);
  return 1.0 / (1.0 + std::exp(-eta));
}

LogisticModel fit_logistic(const FirmPanel& train) {
  const int dim = train.covariate_dim();
  const std::int64_t n_cells = train.n_cells();
  if (n_cells == 0) throw Error("fit_logistic: empty panel");

  std::int64_t n_pos = 0;
  for (const auto& f : train.firms) n_pos += f.defaulted() ? 1 : 0;
  if (n_pos == 0 || n_pos == n_cells)
    throw Error("fit_logistic: single-class training data");

  const double base = static_cast<double>(n_pos) / static_cast<double>(n_cells);
  Vec beta = Vec::Zero(dim);
  beta(0) = std::log(base / (1.0 - base));

  constexpr int kMaxIter = 100;
  constexpr double kGradTol = 1e-8;
  constexpr double kSeparationBound = 30.0;

  Mat xtwx(dim, dim);
  Vec grad(dim);
  int iter = 0;
  for (iter = 1; iter <= kMaxIter; ++iter) {
    xtwx.setZero();
    grad.setZero();
    for (const auto& firm : train.firms) {
      for (int t = 0; t < firm.n_months(); ++t) {
        const auto z = firm.covariates.row(t);
        const double p = 1.0 / (1.0 + std::exp(-beta.dot(z)));
        const double w = std::max(p * (1.0 - p), 1e-12);
        grad += (static_cast<double>(firm.defaults[t]) - p) * z.transpose();
        xtwx.selfadjointView<Eigen::Lower>().rankUpdate(z.transpose(), w);
      }
    }
    xtwx = xtwx.selfadjointView<Eigen::Lower>();
    if (grad.lpNorm<Eigen::Infinity>() <= kGradTol) break;
    Eigen::LLT<Mat> llt(xtwx);
    if (llt.info() != Eigen::Success)
      throw Error("fit_logistic: singular information matrix");
    beta += llt.solve(grad);
    if (beta.lpNorm<Eigen::Infinity>() > kSeparationBound) throw Error("separable data");
  }
  if (iter > kMaxIter)
    throw Error(fmt::format("fit_logistic did not converge (grad norm {:.3g})",
                            grad.lpNorm<Eigen::Infinity>()));

  LogisticModel model;
  model.beta = beta;
  Eigen::LLT<Mat> llt(xtwx);
  if (llt.info() == Eigen::Success)
    model.se = llt.solve(Mat::Identity(dim, dim)).diagonal().array().sqrt();
  else
    model.se = Vec::Constant(dim, std::numeric_limits<double>::quiet_NaN());
  model.iterations = iter;
  return model;
}

std::vector<CohortMember> build_cohort(const FirmPanel& panel, int cohort_start,
                                       int horizon_months) {
  std::vector<CohortMember> cohort;
  for (const auto& firm : panel.firms) {
    if (!firm.covers(cohort_start)) continue;
    CohortMember m;
    m.firm_id = firm.firm_id;
    m.state = firm.row(cohort_start);
    const int dm = firm.default_month();
    m.label = (dm >= cohort_start && dm < cohort_start + horizon_months) ? 1 : 0;
    cohort.push_back(std::move(m));
  }
  return cohort;
}

LogisticBaselineResult logistic_baseline(const FirmPanel& train,
                                         const std::vector<CohortMember>& cohort,
                                         int horizon_months, int cohort_year) {
  const LogisticModel model = fit_logistic(train);
  LogisticBaselineResult out;
  out.coefficients = model.beta;
  out.cohort.horizon_months = horizon_months;
  out.cohort.cohort_year = cohort_year;
  for (const auto& m : cohort) {
    const double p = model.monthly_pd(m.state);
    // Per-month probability compounded over the horizon.
    const double score = 1.0 - std::pow(1.0 - p, horizon_months);
    out.cohort.entries.push_back({m.firm_id, score, m.label});
  }
  return out;
}

std::pair<std::vector<std::string>, std::vector<std::string>> split_firms(
    const FirmPanel& panel) {
  std::vector<std::string> ids;
  ids.reserve(panel.n_firms());
  for (const auto& f : panel.firms) ids.push_back(f.firm_id);
  std::sort(ids.begin(), ids.end(), [](const std::string& a, const std::string& b) {
    const auto ha = fnv1a64(a), hb = fnv1a64(b);
    return ha != hb ? ha < hb : a < b;
  });
  const std::size_t half = (ids.size() + 1) / 2;
  std::vector<std::string> estimation(ids.begin(), ids.begin() + half);
  std::vector<std::string> evaluation(ids.begin() + half, ids.end());
  return {std::move(estimation), std::move(evaluation)};
}

namespace {

struct FittedModel {
  ThetaEstimate estimate;
  CovariateForecastModel covariates;
  Vec terminal_frailty;  // PIMH samples of H at the training end
  int train_end = 0;
};

FittedModel fit_for_backtest(const FirmPanel& est_train, const PriorSpec& prior,
                             const BacktestConfig& cfg, std::uint64_t seed) {
  FittedModel fm;
  EmConfig em = cfg.em;
  em.seed = seed;
  fm.estimate = em_estimate(est_train, prior, em);
  fm.covariates = fit_covariate_model(est_train, est_train.first_month,
                                      est_train.last_month);
  PimhConfig pimh = cfg.em.pimh;
  pimh.k_iterations = std::max(cfg.em.n_paths_per_iter * 2, 20);
  pimh.seed = derive_seed(seed, 0xB7);
  const PimhChain chain = run_pimh(est_train, fm.estimate.theta, pimh);
  const auto paths = chain.kept_paths();
  fm.terminal_frailty.resize(paths.size());
  for (std::size_t i = 0; i < paths.size(); ++i)
    fm.terminal_frailty(i) = paths[i].h(paths[i].n_months() - 1);
  fm.train_end = est_train.last_month;
  return fm;
}

}  // namespace

BacktestReport backtest(const FirmPanel& panel, const BacktestConfig& cfg) {
  if (cfg.models.empty() && !cfg.include_logistic)
    throw Error("backtest: no models configured");
  const int train_start = month_of_january(cfg.train_start_year);
  const int train_end = month_of_january(cfg.train_end_year) + 11;
  if (train_start < panel.first_month || train_end > panel.last_month)
    throw Error(fmt::format("backtest: training years {}..{} not covered by the panel",
                            cfg.train_start_year, cfg.train_end_year));

  const auto [est_ids, eval_ids] = split_firms(panel);
  const FirmPanel est_train =
      slice_panel(subset_panel(panel, est_ids), train_start, train_end);
  const FirmPanel eval_half = subset_panel(panel, eval_ids);

  BacktestReport report;

  auto make_row = [&](const std::string& model_name, int horizon_years,
                      auto&& score_cohort) {
    BacktestRow row;
    row.model = model_name;
    row.horizon_years = horizon_years;
    const int hm = 12 * horizon_years;
    for (int year = cfg.eval_start_year + horizon_years - 1; year <= cfg.eval_end_year;
         ++year) {
      const int cohort_start = month_of_january(year - horizon_years + 1);
      const auto members = build_cohort(eval_half, cohort_start, hm);
      BacktestCell cell;
      cell.report_year = year;
      cell.n_firms = static_cast<int>(members.size());
      for (const auto& m : members) cell.n_defaults += m.label;
      ScoredCohort scored = score_cohort(members, cohort_start, hm, year);
      if (cell.n_defaults > 0 && cell.n_defaults < cell.n_firms) {
        cell.ar = accuracy_ratio(scored);
      } else {
        ++row.n_undefined;
      }
      row.cells.push_back(cell);
      row.cohorts.push_back(std::move(scored));
    }
    double sum = 0.0;
    int n_defined = 0;
    for (const auto& c : row.cells)
      if (c.ar) {
        sum += *c.ar;
        ++n_defined;
      }
    if (n_defined > 0) row.average = sum / n_defined;
    report.rows.push_back(std::move(row));
  };

  for (const auto& spec : cfg.models) {
    const FittedModel fm = fit_for_backtest(
        est_train, spec.prior, cfg, derive_seed(cfg.seed, fnv1a64(spec.name)));
    const OuParams ou{fm.estimate.theta.eta, fm.estimate.theta.sigma, 1.0};

    for (int horizon : cfg.horizons_years) {
      make_row(spec.name, horizon,
               [&](const std::vector<CohortMember>& members, int cohort_start, int hm,
                   int year) {
                 ScoredCohort scored;
                 scored.horizon_months = hm;
                 scored.cohort_year = year;
                 const int gap = cohort_start - fm.train_end;
                 const Mat frailty = forecast_frailty(
                     fm.terminal_frailty, ou, gap + hm, cfg.forecast.n_draws,
                     derive_seed(cfg.seed, fnv1a64(spec.name), year));
                 const Mat frailty_window = frailty.middleCols(gap, hm);
                 scored.entries.resize(members.size());
                 parallel_for(static_cast<std::int64_t>(members.size()), [&](std::int64_t i) {
                   const auto& m = members[i];
                   const PdTermStructure ts = default_probability(
                       m.firm_id, m.state, fm.covariates, frailty_window,
                       fm.estimate.theta, hm, cfg.forecast,
                       derive_seed(cfg.seed, fnv1a64(spec.name), 0x5C0));
                   scored.entries[i] = {m.firm_id, ts.pd(hm - 1), m.label};
                 });
                 return scored;
               });
    }
  }

  if (cfg.include_logistic) {
    const LogisticModel logit = fit_logistic(est_train);
    for (int horizon : cfg.horizons_years) {
      make_row("logistic", horizon,
               [&](const std::vector<CohortMember>& members, int, int hm, int year) {
                 ScoredCohort scored;
                 scored.horizon_months = hm;
                 scored.cohort_year = year;
                 for (const auto& m : members) {
                   const double p = logit.monthly_pd(m.state);
                   scored.entries.push_back(
                       {m.firm_id, 1.0 - std::pow(1.0 - p, hm), m.label});
                 }
                 return scored;
               });
    }
  }
  return report;
}

}  // namespace frailty
