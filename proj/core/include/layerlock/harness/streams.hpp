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

#ifndef LAYERLOCK_HARNESS_STREAMS_HPP_
#define LAYERLOCK_HARNESS_STREAMS_HPP_

#include <cstdint>

#include "layerlock/numcore/rng.hpp"

namespace layerlock::harness {

// Rng stream ids by purpose. A run's generator is Rng(seed, purpose), so two
// strategies that share a seed also share queries, re-inits and shuffles.
enum class Purpose : std::uint64_t {
  kVictimInit = 0x76696e6974ULL,     // "vinit"
  kVictimData = 0x7664617461ULL,     // "vdata"
  kAttackData = 0x6164617461ULL,     // "adata"
  kAttackNoise = 0x6e6f697365ULL,    // "noise"
  kReinit = 0x7265696e6974ULL,       // "reinit"
  kShuffle = 0x73687566ULL,          // "shuf"
  kCustomData = 0x6364617461ULL,     // "cdata"
  kCustomEval = 0x636576616cULL,     // "ceval"
};

inline Rng stream(std::uint64_t seed, Purpose p) {
  return Rng(seed, static_cast<std::uint64_t>(p));
}

}  // namespace layerlock::harness

#endif  // LAYERLOCK_HARNESS_STREAMS_HPP_
