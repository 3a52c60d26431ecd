// Copyright (c) 2026 the inrc authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

namespace inrc {

// Counter-based SplitMix64 generator (Steele, Lea & Flood; the reference
// mixer used for xoshiro seeding). Output i for a given seed is
//   mix64(seed + (i+1) * 0x9E3779B97F4A7C15)
// with mix64 the xor-shift/multiply chain below, so streams are pure
// functions of (seed, counter) and reproducible across platforms.
//
// Normal deviates come from the Box-Muller transform; each pair of normals
// consumes two uniforms, and the second member of a pair is cached.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {}

  static std::uint64_t mix64(std::uint64_t z);

  std::uint64_t next_u64();

  /// Uniform in [0, 1) with 53 random mantissa bits.
  double next_unit();

  /// Uniform in [lo, hi).
  double next_uniform(double lo, double hi);

  /// Standard normal via Box-Muller.
  double next_normal();

  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t next_below(std::uint64_t n);

  /// Fisher-Yates permutation of {0, ..., n-1}.
  std::vector<std::size_t> permutation(std::size_t n);

  /// Derives an independent sub-stream seed; `stream` tags the purpose.
  std::uint64_t fork(std::uint64_t stream) const;

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  bool has_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

}  // namespace inrc
