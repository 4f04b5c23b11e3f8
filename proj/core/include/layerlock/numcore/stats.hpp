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

#ifndef LAYERLOCK_NUMCORE_STATS_HPP_
#define LAYERLOCK_NUMCORE_STATS_HPP_

#include <span>
#include <stdexcept>
#include <vector>

namespace layerlock {

// Thrown when a coefficient is undefined: too few pairs or a constant side.
class DegenerateSample : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

double mean(std::span<const double> x);
// Population variance.
double variance(std::span<const double> x);

// Ranks starting at 1; ties share the average of their positions.
std::vector<double> average_ranks(std::span<const double> x);

// Both need at least 3 pairs and a non-constant x and y.
double pearson(std::span<const double> x, std::span<const double> y);
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace layerlock

#endif  // LAYERLOCK_NUMCORE_STATS_HPP_
