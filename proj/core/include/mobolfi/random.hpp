#pragma once

#include <random>

#include "mobolfi/types.hpp"

namespace mobolfi {

/// Every stochastic component draws from its own engine seeded by a derived
/// seed, so components replay independently of each other.
using Rng = std::mt19937_64;

/// SplitMix64 finalizer: decorrelates nearby integer seeds before they reach
/// the Mersenne Twister.
constexpr Seed mix_seed(Seed x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline Rng make_rng(Seed seed) { return Rng(mix_seed(seed)); }

/// Seed of the index-th independent job under `base` (replicates, chains).
constexpr Seed derive_seed(Seed base, Seed index) { return mix_seed(mix_seed(base) + index); }

inline Vector standard_normal_vector(Rng& rng, Eigen::Index n) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = nd(rng);
  return v;
}

inline Vector uniform_in_box(Rng& rng, const Box& box) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector v(box.lower.size());
  for (Eigen::Index i = 0; i < v.size(); ++i)
    v[i] = box.lower[i] + u(rng) * (box.upper[i] - box.lower[i]);
  return v;
}

}  // namespace mobolfi
