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

#ifndef LAYERLOCK_NUMCORE_HASH_HPP_
#define LAYERLOCK_NUMCORE_HASH_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace layerlock {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

// 64-bit FNV-1a; `state` allows hashing in pieces.
constexpr std::uint64_t fnv1a64(std::span<const unsigned char> bytes,
                                std::uint64_t state = kFnvOffset) {
  for (unsigned char b : bytes) {
    state ^= b;
    state *= kFnvPrime;
  }
  return state;
}

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t state = kFnvOffset) {
  return fnv1a64(std::span(reinterpret_cast<const unsigned char*>(s.data()), s.size()), state);
}

// 16 lowercase hex digits.
std::string hex64(std::uint64_t v);

}  // namespace layerlock

#endif  // LAYERLOCK_NUMCORE_HASH_HPP_
