#include "frailty/pimh.hpp"

#include <fmt/format.h>

#include <cmath>

namespace frailty {

namespace {
constexpr std::uint64_t kStreamDraw = 11;
constexpr std::uint64_t kStreamAccept = 12;
constexpr std::uint64_t kStreamSmcSeed = 13;
}  // namespace

std::vector<FrailtyPath> PimhChain::kept_paths() const {
  std::vector<FrailtyPath> out;
  const int burn = cfg.effective_burn_in();
  const int thin = cfg.thin > 0 ? cfg.thin : 1;
  for (std::size_t k = burn; k < samples.size(); k += thin)
    out.push_back(samples[k].path);
  return out;
}

double PimhChain::mean_log_marginal() const {
  const int burn = cfg.effective_burn_in();
  double acc = 0.0;
  int n = 0;
  for (std::size_t k = burn; k < samples.size(); ++k, ++n) acc += samples[k].log_marginal;
  return n > 0 ? acc / n : 0.0;
}

PimhSample draw_path_from_smc(const SmcOutput& out, RngStream& rng) {
  const int n = static_cast<int>(out.weights.size());
  const double u = rng.uniform();
  double acc = 0.0;
  int pick = n - 1;
  for (int i = 0; i < n; ++i) {
    acc += out.weights(i);
    if (u <= acc) {
      pick = i;
      break;
    }
  }
  return PimhSample{out.path(pick), out.log_marginal};
}

PimhChain run_pimh(const FirmPanel& window, const Theta& theta, const PimhConfig& cfg) {
  if (cfg.k_iterations < 0) throw Error("pimh: k_iterations must be >= 0");
  PimhChain chain;
  chain.cfg = cfg;
  chain.samples.reserve(cfg.k_iterations + 1);

  auto smc_at = [&](int k) {
    SmcConfig smc_cfg = cfg.smc;
    smc_cfg.seed = derive_seed(cfg.seed, kStreamSmcSeed, static_cast<std::uint64_t>(k));
    return run_smc(window, theta, smc_cfg);
  };

  PimhSample current;
  try {
    const SmcOutput out = smc_at(0);
    RngStream draw(cfg.seed, kStreamDraw, 0);
    current = draw_path_from_smc(out, draw);
  } catch (const Error& e) {
    throw Error(fmt::format("pimh iteration 0: {}", e.what()));
  }
  chain.samples.push_back(current);

  for (int k = 1; k <= cfg.k_iterations; ++k) {
    PimhSample proposal;
    try {
      const SmcOutput out = smc_at(k);
      RngStream draw(cfg.seed, kStreamDraw, static_cast<std::uint64_t>(k));
      proposal = draw_path_from_smc(out, draw);
    } catch (const Error& e) {
      throw Error(fmt::format("pimh iteration {}: {}", k, e.what()));
    }
    RngStream accept(cfg.seed, kStreamAccept, static_cast<std::uint64_t>(k));
    const double log_u = std::log(accept.uniform());
    // The decision sees only the two marginal-likelihood estimates.
    if (log_u < proposal.log_marginal - current.log_marginal) {
      current = proposal;
      ++chain.acceptance_count;
    }
    chain.samples.push_back(current);
  }
  return chain;
}

}  // namespace frailty
