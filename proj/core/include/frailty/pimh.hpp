#ifndef FRAILTY_PIMH_HPP
#define FRAILTY_PIMH_HPP

#include "frailty/smc.hpp"

#include <cstdint>
#include <vector>

namespace frailty {

struct PimhConfig {
  int k_iterations = 100;  // moves after the initialization draw
  SmcConfig smc;
  int burn_in = -1;  // < 0: 10% of k_iterations
  int thin = 1;
  std::uint64_t seed = 0;

  int effective_burn_in() const {
    return burn_in >= 0 ? burn_in : k_iterations / 10;
  }
};

struct PimhSample {
  FrailtyPath path;
  double log_marginal = 0.0;
};

/// Chain state of the particle independent Metropolis-Hastings sampler:
/// samples[k] is the state after move k (index 0 is the initialization draw).
struct PimhChain {
  std::vector<PimhSample> samples;
  int acceptance_count = 0;
  PimhConfig cfg;

  double acceptance_rate() const {
    return cfg.k_iterations > 0
               ? static_cast<double>(acceptance_count) / cfg.k_iterations
               : 0.0;
  }
  /// Post burn-in, thinned frailty paths.
  std::vector<FrailtyPath> kept_paths() const;
  /// Mean stored log-marginal over the kept samples.
  double mean_log_marginal() const;
};

/// Each iteration runs a fresh filter, draws one ancestral path from the
/// final weighted particles and accepts with probability
/// min(1, p_hat* / p_hat_current), compared on the log scale.
PimhChain run_pimh(const FirmPanel& window, const Theta& theta, const PimhConfig& cfg);

/// Draw one particle path by the final weights; returns the path and the
/// run's log marginal-likelihood estimate.
PimhSample draw_path_from_smc(const SmcOutput& out, RngStream& rng);

}  // namespace frailty

#endif  // FRAILTY_PIMH_HPP
