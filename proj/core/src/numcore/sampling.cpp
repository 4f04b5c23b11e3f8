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

#include "layerlock/numcore/sampling.hpp"

#include <cmath>
#include <stdexcept>

namespace layerlock {

double xavier_bound(std::size_t rows, std::size_t cols) {
  return std::sqrt(6.0 / static_cast<double>(rows + cols));
}

Matrix xavier_init(std::size_t rows, std::size_t cols, Rng& rng) {
  if (rows == 0 || cols == 0) throw std::invalid_argument("xavier_init: empty shape");
  const double bound = xavier_bound(rows, cols);
  Matrix out(rows, cols);
  for (double& x : out.data()) x = rng.uniform(-bound, bound);
  return out;
}

Matrix normal_sample(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix out(rows, cols);
  for (double& x : out.data()) x = rng.normal();
  return out;
}

Matrix laplace_sample(double scale, std::size_t rows, std::size_t cols, Rng& rng) {
  if (scale < 0.0) throw std::invalid_argument("laplace_sample: negative scale");
  Matrix out(rows, cols);
  if (scale == 0.0) return out;
  for (double& x : out.data()) x = rng.laplace(scale);
  return out;
}

}  // namespace layerlock
