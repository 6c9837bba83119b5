#pragma once

// Counter-based randomness. Every random quantity in the library is a pure
// function of (seed, counter...), so fields can be addressed at random and
// replicas can run in any order without changing results.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace webflow {

/// splitmix64 finalizer: a bijective 64-bit avalanche mix.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) noexcept {
  return mix64(a ^ mix64(b + 0x632BE59BD9B4E019ULL));
}

/// Hash of a lattice site under a seed.
constexpr std::uint64_t site_hash(std::uint64_t seed, std::int64_t x,
                                  std::int64_t t) noexcept {
  return hash_combine(hash_combine(mix64(seed), static_cast<std::uint64_t>(x)),
                      static_cast<std::uint64_t>(t));
}

/// Substream seed for replica `index` of a run seeded with `seed`.
constexpr std::uint64_t substream_seed(std::uint64_t seed,
                                       std::uint64_t index) noexcept {
  return hash_combine(mix64(seed ^ 0xA0761D6478BD642FULL), index);
}

/// Sequential generator over one substream (splitmix64 stepping). Satisfies
/// UniformRandomBitGenerator so it can be handed to <random> if needed, but
/// the library only uses its own uniform/normal draws, which are identical
/// on every platform.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
      : state_(substream_seed(seed, stream)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  result_type operator()() noexcept {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform on (0, 1); never returns 0.
  double uniform() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller, caching the second variate.
  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double theta = 2.0 * std::numbers::pi * uniform();
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace webflow
