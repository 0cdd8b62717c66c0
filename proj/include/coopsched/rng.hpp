#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace coopsched {

/// Counter-based deterministic RNG.
///
/// Every stream is identified by a key assembled from a master seed plus a
/// few integer coordinates (stream purpose, run index, timestep, robot or
/// pair id).  Draw k of a stream is a pure function of (key, k), so two
/// simulations that share a master seed see identical noise on the shared
/// coordinates no matter which other streams they consume or in what order.
/// That property is what makes policy comparisons under a common seed
/// meaningful.

/// splitmix64 output function; bijective on 64-bit integers.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Key derivation: fold coordinates into the running key one at a time.
inline std::uint64_t derive_key(std::uint64_t key) { return mix64(key); }

template <typename... Rest>
inline std::uint64_t derive_key(std::uint64_t key, std::uint64_t next,
                                Rest... rest) {
  return derive_key(mix64(key) ^ next, rest...);
}

/// Stream purposes. Keeping them distinct guarantees that, e.g., odometry
/// noise never aliases measurement noise even at equal (run, tick, id).
enum class StreamKind : std::uint64_t {
  truth_init = 0x11,     // initial true headings / poses
  estimate_init = 0x22,  // initial estimate perturbations
  odometry = 0x33,       // encoder + compass noise
  measurement = 0x44,    // relative-measurement noise
  policy = 0x55,         // randomized scheduling policies
  scratch = 0x66,        // tests, benches, synthetic fixtures
};

class Stream {
 public:
  explicit Stream(std::uint64_t key) : key_(key) {}

  template <typename... Parts>
  static Stream of(std::uint64_t master, StreamKind kind, Parts... parts) {
    return Stream(derive_key(master, static_cast<std::uint64_t>(kind),
                             static_cast<std::uint64_t>(parts)...));
  }

  std::uint64_t next_u64() { return mix64(key_ ^ counter_++); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Unbiased integer in [0, n) by rejection.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return x % n;
  }

  /// Standard normal via Box-Muller (cosine branch only, for a fixed
  /// draws-per-sample count across platforms).
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]: keeps log finite
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace coopsched
