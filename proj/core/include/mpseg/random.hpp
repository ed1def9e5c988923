#pragma once

#include <cmath>
#include <cstdint>

namespace mpseg {

// Counter-based generator: SplitMix64 finalizer over (seed, stream, counter).
// Every value is a pure function of its inputs, so volumes built from it are
// byte-reproducible on any platform.
//
//   x = seed + 0x9E3779B97F4A7C15 * (counter * 4 + stream + 1)
//   x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9
//   x = (x ^ (x >> 27)) * 0x94D049BB133111EB
//   x =  x ^ (x >> 31)
inline std::uint64_t splitmix64(std::uint64_t x) {
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t counter_bits(std::uint64_t seed, std::uint64_t counter,
                                  std::uint64_t stream = 0) {
  return splitmix64(seed + 0x9E3779B97F4A7C15ULL * (counter * 4 + stream + 1));
}

// Uniform in [0, 1) with 53 random bits.
inline double to_unit_double(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

inline double counter_uniform(std::uint64_t seed, std::uint64_t counter, std::uint64_t stream = 0) {
  return to_unit_double(counter_bits(seed, counter, stream));
}

// Standard normal via Box-Muller on streams 0 and 1 of the counter.
inline double counter_normal(std::uint64_t seed, std::uint64_t counter) {
  constexpr double kTwoPi = 6.283185307179586;
  const double u1 = 1.0 - counter_uniform(seed, counter, 0);  // (0, 1]
  const double u2 = counter_uniform(seed, counter, 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

/// Sequential generator over the same counter scheme.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 2) : seed_(seed), stream_(stream) {}
  double uniform() { return counter_uniform(seed_, counter_++, stream_); }
  std::uint64_t bits() { return counter_bits(seed_, counter_++, stream_); }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
};

}  // namespace mpseg
