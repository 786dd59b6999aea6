#ifndef FRAILTY_RNG_HPP
#define FRAILTY_RNG_HPP

#include <cstdint>

namespace frailty {

// Counter-based random streams. Every draw is a pure function of
// (seed, id0, id1, id2, counter), so draws can be produced out of order and
// results do not depend on how work is scheduled across threads.

namespace detail {
// SplitMix64 finalizer; full-avalanche 64 -> 64 mix.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

/// Derive a child seed, giving nested components (per-iteration SMC runs,
/// per-firm forecasts) their own independent stream families.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                                 std::uint64_t b = 0) {
  std::uint64_t h = detail::mix64(seed ^ 0x6a09e667f3bcc908ULL);
  h = detail::mix64(h ^ a);
  h = detail::mix64(h ^ b);
  return h;
}

class RngStream {
 public:
  RngStream() = default;
  RngStream(std::uint64_t seed, std::uint64_t id0, std::uint64_t id1 = 0,
            std::uint64_t id2 = 0) {
    key_ = detail::mix64(seed);
    key_ = detail::mix64(key_ ^ id0);
    key_ = detail::mix64(key_ ^ id1);
    key_ = detail::mix64(key_ ^ id2);
  }

  std::uint64_t bits_at(std::uint64_t counter) const {
    return detail::mix64(key_ ^ (counter * 0xd1342543de82ef95ULL));
  }

  /// Uniform draw in (0, 1]; strictly positive so log() is safe.
  double uniform_at(std::uint64_t counter) const {
    return (static_cast<double>(bits_at(counter) >> 11) + 1.0) * 0x1.0p-53;
  }

  /// Standard normal by Box-Muller; draw i consumes counters 2i and 2i+1.
  double normal_at(std::uint64_t i) const;

  // Sequential interface over the same counter space; a normal consumes two
  // counters. Callers that also use the *_at accessors should dedicate a
  // stream to one access pattern.
  double uniform() { return uniform_at(ctr_++); }
  double normal() {
    const double z = normal_at(ctr_ / 2);
    ctr_ += 2;
    return z;
  }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t ctr_ = 0;
};

}  // namespace frailty

#endif  // FRAILTY_RNG_HPP
