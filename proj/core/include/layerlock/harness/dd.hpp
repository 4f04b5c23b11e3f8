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

#ifndef LAYERLOCK_HARNESS_DD_HPP_
#define LAYERLOCK_HARNESS_DD_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "layerlock/harness/training.hpp"
#include "layerlock/toymodel/secured_set.hpp"

namespace layerlock::harness {

inline constexpr double kDefaultEpsilon = 0.05;

struct DDConfig {
  std::vector<std::uint64_t> seeds{20, 42, 1234};
  double epsilon = kDefaultEpsilon;
};

struct DDEntry {
  std::size_t prefix = 0;  // secured layers 1..prefix
  double mean = 0.0;
  std::vector<double> per_seed;
};

struct DDReport {
  std::vector<std::uint64_t> seeds;  // deduplicated, first-seen order
  double epsilon = kDefaultEpsilon;
  double dd_empty = 0.0;  // nothing re-initialized: the victim's own loss
  std::vector<DDEntry> curve;
  DDEntry full;           // every layer re-initialized
  std::optional<std::size_t> selected;

  double threshold() const { return (1.0 - epsilon) * full.mean; }
  nlohmann::json to_json() const;
};

// Drops repeated seeds, keeping the first occurrence.
std::vector<std::uint64_t> unique_seeds(const std::vector<std::uint64_t>& seeds);

// Mean eval cross-entropy of the victim with `secured` re-initialized from
// Rng(seed, reinit), averaged over unique seeds. No training is involved.
double distillation_difficulty(const DecoderParams& victim, const toymodel::SecuredSet& secured,
                               const taskgen::Dataset& eval,
                               const std::vector<std::uint64_t>& seeds,
                               std::vector<double>* per_seed = nullptr, std::size_t jobs = 1);

// DD for every bottom prefix in `prefixes` (1..L when empty) plus the full
// set, and the stopping rule applied to the curve.
DDReport compute_dd(const DecoderParams& victim, const taskgen::Dataset& eval,
                    const DDConfig& config, std::vector<std::size_t> prefixes = {},
                    std::size_t jobs = 1);

// Smallest l (1-based position in `curve`) with curve[l-1] >= (1-eps)*full.
std::optional<std::size_t> select_prefix(const std::vector<double>& curve, double full,
                                         double epsilon);

struct SolidChoice {
  toymodel::SecuredSet secured;
  std::optional<std::size_t> prefix;
  bool fallback = false;  // no prefix qualified; everything secured
  std::string warning;
};

SolidChoice solid_select(const DDReport& dd, std::size_t num_layers);

}  // namespace layerlock::harness

#endif  // LAYERLOCK_HARNESS_DD_HPP_
