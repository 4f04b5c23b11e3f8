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

#ifndef LAYERLOCK_NUMCORE_SAMPLING_HPP_
#define LAYERLOCK_NUMCORE_SAMPLING_HPP_

#include <cstddef>

#include "layerlock/numcore/matrix.hpp"
#include "layerlock/numcore/rng.hpp"

namespace layerlock {

// Entries i.i.d. uniform on [-b, b), b = sqrt(6 / (rows + cols)).
Matrix xavier_init(std::size_t rows, std::size_t cols, Rng& rng);

double xavier_bound(std::size_t rows, std::size_t cols);

// Entries i.i.d. standard normal, row-major draw order.
Matrix normal_sample(std::size_t rows, std::size_t cols, Rng& rng);

// Entries i.i.d. Laplace(0, scale). scale == 0 gives exact zeros and consumes
// no randomness; scale < 0 throws.
Matrix laplace_sample(double scale, std::size_t rows, std::size_t cols, Rng& rng);

}  // namespace layerlock

#endif  // LAYERLOCK_NUMCORE_SAMPLING_HPP_
