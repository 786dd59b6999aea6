#ifndef FRAILTY_SMC_HPP
#define FRAILTY_SMC_HPP

#include "frailty/model.hpp"
#include "frailty/ou.hpp"
#include "frailty/rng.hpp"
#include "frailty/types.hpp"

#include <cstdint>
#include <vector>

namespace frailty {

enum class Resampling { multinomial, systematic };

/// Law of the frailty at the first window month: the process mean (zero)
/// propagated one step, or the stationary distribution N(0, sigma^2 / 2 eta).
enum class FrailtyInitialLaw { mean_zero_step, stationary };

struct SmcConfig {
  int n_particles = 1024;
  Resampling resampling = Resampling::multinomial;
  FrailtyInitialLaw initial_law = FrailtyInitialLaw::mean_zero_step;
  std::uint64_t seed = 0;
};

/// Bootstrap particle filter output: full ancestral paths, final normalized
/// weights, the unbiased marginal-likelihood estimate and per-step effective
/// sample sizes.
struct SmcOutput {
  int start_month = 0;
  Mat paths;    // n_months x n_particles
  Vec weights;  // sums to 1
  double log_marginal = 0.0;
  Vec ess_by_step;

  FrailtyPath path(int n) const {
    return FrailtyPath{start_month, paths.col(n)};
  }
};

/// Algorithm: bootstrap proposal (the OU transition), multinomial or
/// systematic resampling every step, incremental weights equal to the
/// observation density g_t. The initial proposal is the OU law started from
/// h = 0 and propagated one step. Deterministic given cfg.seed; particle
/// streams are keyed by (seed, particle, step).
SmcOutput run_smc(const FirmPanel& window, const Theta& theta, const SmcConfig& cfg);

/// Ancestor indices A^n for one resampling step. Multinomial draws i.i.d.
/// categorical(weights); systematic uses stratified positions (u + n) / N.
std::vector<int> resample(Eigen::Ref<const Vec> weights, Resampling method,
                          RngStream& rng);

}  // namespace frailty

#endif  // FRAILTY_SMC_HPP
