#pragma once

#include <cstdint>
#include <string_view>

namespace nocmap {

// Counter-based random source. Every draw is a pure function of
// (seed, stream, counter), so results do not depend on evaluation order.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view text,
                                std::uint64_t h = 0xcbf29ce484222325ULL) noexcept {
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class CounterRng {
 public:
  constexpr CounterRng(std::uint64_t seed, std::string_view stream,
                       std::uint64_t sub = 0) noexcept
      : key_(mix64(seed ^ mix64(fnv1a64(stream) + sub))) {}

  constexpr std::uint64_t bits(std::uint64_t counter,
                               std::uint64_t lane = 0) const noexcept {
    return mix64(key_ ^ mix64(counter * 0x2545f4914f6cdd1dULL + lane));
  }

  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform(std::uint64_t counter, std::uint64_t lane = 0) const noexcept {
    return static_cast<double>(bits(counter, lane) >> 11) * 0x1.0p-53;
  }

  // Standard normal pair via Box-Muller on lanes (2*lane, 2*lane+1).
  void normal_pair(std::uint64_t counter, double& a, double& b,
                   std::uint64_t lane = 0) const noexcept;

  std::uint64_t below(std::uint64_t counter, std::uint64_t bound,
                      std::uint64_t lane = 0) const noexcept {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(bits(counter, lane)) * bound) >> 64);
  }

 private:
  std::uint64_t key_;
};

// Sequential convenience wrapper over a CounterRng stream.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::string_view stream, std::uint64_t sub = 0)
      : rng_(seed, stream, sub) {}
  std::uint64_t next() noexcept { return rng_.bits(counter_++); }
  double uniform() noexcept { return rng_.uniform(counter_++); }
  std::uint64_t below(std::uint64_t bound) noexcept {
    return rng_.below(counter_++, bound);
  }

 private:
  CounterRng rng_;
  std::uint64_t counter_ = 0;
};

}  // namespace nocmap
