#pragma once

// Seed splitting. Every random quantity in the library is a pure function of
// a master seed and a stream label:
//
//   stream seed   = derive_seed(master, label...)        (SplitMix64 mixing)
//   walk streams  = Xoshiro256pp(derive_seed(master, path_index))
//   site values   = site_uniform(seed, x), a hash of the coordinates of x
//
// so results do not depend on thread count or on evaluation order, and nested
// boxes see the same potential on their common sites.

#include <cstdint>
#include <random>

#include "lyap/lattice.hpp"

namespace lyap {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

/// SplitMix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master) { return mix64(master + kGolden); }

template <typename... Rest>
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t label, Rest... rest) {
  return derive_seed(mix64(master + kGolden) ^ mix64(label * kGolden + 0x632BE59BD9B4E019ULL), rest...);
}

/// xoshiro256++ (Blackman & Vigna), state filled from the seed by SplitMix64.
/// Used instead of std::mt19937_64, which costs about five times as much per
/// draw and dominates the walk kernels. Satisfies UniformRandomBitGenerator.
class Xoshiro256pp {
 public:
  using result_type = std::uint64_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  explicit Xoshiro256pp(std::uint64_t seed = 0) {
    for (auto& w : s_) {
      seed += kGolden;
      w = mix64(seed);
    }
  }
  result_type operator()() {
    const std::uint64_t r = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return r;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
};

using Engine = Xoshiro256pp;

inline Engine make_engine(std::uint64_t seed) { return Engine(seed); }

/// Uniform on [0, 1) with 53 random bits.
inline double to_unit(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

/// Uniform on (0, 1].
inline double to_unit_open_low(std::uint64_t bits) { return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53; }

inline double uniform01(Engine& eng) { return to_unit(eng()); }

/// Uniform on [0, 1) attached to a lattice site.
inline double site_uniform(std::uint64_t seed, const Site& x) {
  std::uint64_t h = mix64(seed ^ 0xD1B54A32D192ED03ULL);
  for (int i = 0; i < x.dim(); ++i) h = mix64(h + static_cast<std::uint64_t>(x[i]) * kGolden + static_cast<std::uint64_t>(i));
  return to_unit(mix64(h));
}

}  // namespace lyap
