// Copyright 2026 The LayerLock Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LAYERLOCK_NUMCORE_RNG_HPP_
#define LAYERLOCK_NUMCORE_RNG_HPP_

#include <cstdint>
#include <random>

namespace layerlock {

// Seedable, splittable pseudo-random generator.
//
// Backed by std::mt19937_64 seeded through std::seed_seq; both algorithms are
// fully specified by the standard, and every conversion to real values below
// is done by hand, so a (seed, stream) pair yields the same sequence on every
// conforming platform. std::*_distribution is deliberately not used: its
// output is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  // Independent child generator. Same (seed, stream, child) => same child.
  Rng split(std::uint64_t child) const;

  std::uint64_t next_u64() { return engine_(); }
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform on the open interval (0, 1).
  double uniform_open();
  double uniform(double lo, double hi);
  // Unbiased integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);
  // Standard normal via Box-Muller (uses libm log/cos).
  double normal();
  // Laplace(0, scale) by inverse CDF. scale == 0 returns 0 without drawing.
  double laplace(double scale);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
};

// SplitMix64 finalizer; used to derive stream ids.
std::uint64_t mix64(std::uint64_t x);

}  // namespace layerlock

#endif  // LAYERLOCK_NUMCORE_RNG_HPP_
