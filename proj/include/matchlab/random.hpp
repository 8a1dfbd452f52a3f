#pragma once

#include "matchlab/core.hpp"

#include <algorithm>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

// The standard engines are specified bit-for-bit, the standard distributions
// are not, so bounded integers and reals are drawn here directly from the
// engine output. That keeps every seeded result identical across platforms.

namespace matchlab {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent seed for sub-stream `stream` of `seed`. Pure function of both
/// arguments, so work split across threads does not depend on scheduling.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

/// Uniform integer in [0, n), by rejection.
inline Index uniform_index(Rng& rng, Index n) {
  if (n <= 1) return 0;
  const auto range = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % range;
  std::uint64_t x;
  do x = rng();
  while (x >= limit);
  return static_cast<Index>(x % range);
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t k = items.size(); k > 1; --k) {
    const auto pick = static_cast<std::size_t>(uniform_index(rng, static_cast<Index>(k)));
    std::swap(items[k - 1], items[pick]);
  }
}

/// First `k` entries of a Fisher-Yates pass over `items`.
template <typename T>
std::vector<T> sample_without_replacement(std::vector<T> items, std::size_t k, Rng& rng) {
  k = std::min(k, items.size());
  for (std::size_t a = 0; a < k; ++a) {
    const auto pick = a + static_cast<std::size_t>(uniform_index(rng, static_cast<Index>(items.size() - a)));
    std::swap(items[a], items[pick]);
  }
  items.resize(k);
  return items;
}

}  // namespace matchlab
