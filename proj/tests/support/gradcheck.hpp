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

#ifndef LAYERLOCK_TESTS_SUPPORT_GRADCHECK_HPP_
#define LAYERLOCK_TESTS_SUPPORT_GRADCHECK_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "layerlock/toymodel/decoder.hpp"

namespace oracle {

struct GradCase {
  std::string name;
  double rel_err = 0.0;
};

// Every tape primitive (and each transpose/group variant of matmul) against
// central differences over all input entries.
std::vector<GradCase> primitive_gradient_errors(std::uint64_t seed);

// Cross-entropy of a decoder with random weights: for each tensor, a random
// subset of entries is compared against central differences.
std::vector<GradCase> decoder_gradient_errors(std::uint64_t seed,
                                              const layerlock::toymodel::DecoderConfig& config,
                                              std::size_t batch = 2,
                                              std::size_t entries_per_tensor = 12);

}  // namespace oracle

#endif  // LAYERLOCK_TESTS_SUPPORT_GRADCHECK_HPP_
