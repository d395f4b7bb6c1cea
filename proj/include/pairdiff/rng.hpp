#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace pairdiff {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based split: the stream for (seed, path...) depends only on those
/// integers, never on how many other streams were drawn before it.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  std::uint64_t state = mix64(seed);
  for (std::uint64_t p : path) state = mix64(state ^ mix64(p + 0x632be59bd9b4e019ULL));
  return state;
}

inline Rng make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  return Rng(derive_seed(seed, path));
}

/// Uniform integer in [0, n) by rejection on the raw 64-bit output, so the
/// mapping from engine state to index is fixed across standard libraries.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t r = rng();
  while (r >= limit) r = rng();
  return r % n;
}

/// Stream tags keep replicate data, bootstrap resamples and oracle draws apart.
namespace stream {
inline constexpr std::uint64_t kData = 1;
inline constexpr std::uint64_t kBootstrap = 2;
inline constexpr std::uint64_t kOracle = 3;
inline constexpr std::uint64_t kVariance = 4;
}  // namespace stream

}  // namespace pairdiff
