#include "nocmap/rng.hpp"

#include <cmath>
#include <numbers>

namespace nocmap {

void CounterRng::normal_pair(std::uint64_t counter, double& a, double& b,
                             std::uint64_t lane) const noexcept {
  // u1 in (0, 1] keeps the log finite
  const double u1 = 1.0 - uniform(counter, 2 * lane);
  const double u2 = uniform(counter, 2 * lane + 1);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double t = 2.0 * std::numbers::pi * u2;
  a = r * std::cos(t);
  b = r * std::sin(t);
}

}  // namespace nocmap
