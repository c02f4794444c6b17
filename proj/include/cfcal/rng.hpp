#pragma once

#include <cstdint>
#include <random>

namespace cfcal {

using Rng = std::mt19937_64;

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Named seed streams. Values are part of the reproducibility contract:
// changing one changes every artifact derived from it.
enum class Stream : std::uint64_t {
  Bias = 1,
  Phase1 = 2,
  Trajectory = 3,
  Execute = 4,
  Detect = 5,
  Mlp = 6,
  Forest = 7,
  Fold = 8,
  Fine = 9,
  Hand = 10,
  Bench = 11,
  Debride = 12,
  Scene = 13,
  Grasp = 14,
  Sweep = 15,
  Tree = 16,
};

// Counter-based derivation: child = mix(mix(parent ^ mix(stream)) + index).
// Any (parent, stream, index) triple maps to an independent-looking seed, so
// work items can be scheduled in any order without changing their streams.
inline constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream,
                                           std::uint64_t index = 0) noexcept {
  return splitmix64(splitmix64(parent ^ splitmix64(stream)) + 0x632be59bd9b4e019ULL * (index + 1));
}

inline constexpr std::uint64_t derive_seed(std::uint64_t parent, Stream stream,
                                           std::uint64_t index = 0) noexcept {
  return derive_seed(parent, static_cast<std::uint64_t>(stream), index);
}

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

inline double gaussian(Rng& rng, double sigma) {
  if (sigma <= 0.0) return 0.0;
  return std::normal_distribution<double>(0.0, sigma)(rng);
}

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace cfcal
