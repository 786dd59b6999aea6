#ifndef FRAILTY_PARALLEL_HPP
#define FRAILTY_PARALLEL_HPP

#include <cstdint>
#include <exception>
#include <functional>

namespace frailty {

/// Worker cap for parallel_for; 0 restores the hardware default. Results of
/// all library operations are identical for any cap (rng streams are
/// counter-based, every task writes its own slot).
void set_max_threads(int n);
int max_threads();

namespace detail {
void parallel_for_impl(std::int64_t n, const std::function<void(std::int64_t)>& body);
}

template <class F>
void parallel_for(std::int64_t n, F&& body) {
  detail::parallel_for_impl(n, std::function<void(std::int64_t)>(std::forward<F>(body)));
}

}  // namespace frailty

#endif  // FRAILTY_PARALLEL_HPP
