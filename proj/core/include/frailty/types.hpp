#ifndef FRAILTY_TYPES_HPP
#define FRAILTY_TYPES_HPP

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace frailty {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Covariate layout: column 0 is the constant 1, columns 1-2 the shared macro
// series, columns 3.. the firm-specific covariates.
inline constexpr int kCovariateDim = 8;
inline constexpr int kMacroCount = 2;

inline constexpr std::array<std::string_view, kCovariateDim> kCovariateNames = {
    "constant", "treasury",  "sp500", "d2d",
    "firm_size", "roa", "leverage", "firm_return"};

// Month indices count from January 1980 (index 0).
inline constexpr int kEpochYear = 1980;
inline int month_of_january(int year) { return (year - kEpochYear) * 12; }
inline int year_of_month(int month) { return kEpochYear + (month >= 0 ? month / 12 : (month - 11) / 12); }

/// One firm's observation window: contiguous monthly covariate rows plus
/// default indicators. A default (1) may appear at most once and only in the
/// final month, which terminates the record.
struct FirmRecord {
  std::string firm_id;
  int entry_month = 0;
  Mat covariates;                      // (n_months x dim), col 0 == 1
  std::vector<std::uint8_t> defaults;  // same length as rows

  int n_months() const { return static_cast<int>(covariates.rows()); }
  int exit_month() const { return entry_month + n_months() - 1; }
  bool covers(int month) const { return month >= entry_month && month <= exit_month(); }
  bool defaulted() const { return !defaults.empty() && defaults.back() == 1; }
  // Month of default, or -1 when the record is censored.
  int default_month() const { return defaulted() ? exit_month() : -1; }
  Eigen::Ref<const Vec> row(int month) const {
    return covariates.row(month - entry_month).transpose();
  }
};

/// Panel of firms sharing a macro series on a common monthly grid.
struct FirmPanel {
  std::vector<FirmRecord> firms;
  int first_month = 0;
  int last_month = -1;
  Mat macro;  // ((last-first+1) x kMacroCount), NaN where unobserved

  int n_months() const { return last_month - first_month + 1; }
  std::size_t n_firms() const { return firms.size(); }
  std::int64_t n_cells() const;
  int covariate_dim() const {
    return firms.empty() ? kCovariateDim : static_cast<int>(firms.front().covariates.cols());
  }
  std::int64_t n_defaults() const;

  // Throws Error with a per-firm diagnostic on any invariant violation.
  void validate() const;
};

/// Intensity parameter vector. The mean-reversion level of the frailty
/// process is fixed at zero.
struct Theta {
  Vec kappa;           // coefficients of the covariate vector
  double xi = 0.0;     // frailty loading, >= 0
  double eta = 0.0;    // OU mean-reversion speed per month, >= 0
  double sigma = 1.0;  // OU Brownian volatility per month^(1/2), > 0

  void validate() const;
};

/// Latent frailty values on the monthly grid over [start_month, start_month + size - 1].
struct FrailtyPath {
  int start_month = 0;
  Vec h;

  int n_months() const { return static_cast<int>(h.size()); }
  int last_month() const { return start_month + n_months() - 1; }
  double at(int month) const { return h(month - start_month); }
  bool covers(int first, int last) const {
    return start_month <= first && last_month() >= last;
  }
};

struct UniformPrior {};

/// Multivariate normal prior on gamma = (kappa, xi).
struct GaussianPrior {
  Vec mu;
  Mat sigma;  // symmetric positive definite
};

struct PriorSpec {
  enum class Kind { uniform, gaussian };
  Kind kind = Kind::uniform;
  GaussianPrior gaussian;  // valid when kind == gaussian

  static PriorSpec Uniform() { return {}; }
  static PriorSpec Gaussian(Vec mu, Mat sigma);
  bool is_uniform() const { return kind == Kind::uniform; }
};

// Restrict a panel to the month window [t0, t1]; firms whose default falls
// after t1 become censored, firms with no overlap are dropped.
FirmPanel slice_panel(const FirmPanel& panel, int t0, int t1);

// Keep only the given firms (by id); month range and macro series are kept.
FirmPanel subset_panel(const FirmPanel& panel, const std::vector<std::string>& ids);

// FNV-1a 64-bit, used for reproducible firm splits and rng stream keys.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace frailty

#endif  // FRAILTY_TYPES_HPP
