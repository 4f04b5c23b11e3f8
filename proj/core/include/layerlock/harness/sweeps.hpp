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

#ifndef LAYERLOCK_HARNESS_SWEEPS_HPP_
#define LAYERLOCK_HARNESS_SWEEPS_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "layerlock/harness/attack.hpp"
#include "layerlock/harness/customize.hpp"

namespace layerlock::harness {

struct SweepConfig {
  AttackConfig attack;
  std::vector<std::uint64_t> dd_seeds{20, 42, 1234};
  std::optional<CustomizeConfig> customize;  // size sweeps only
};

struct SweepRow {
  std::size_t index = 0;  // window start (placement) or secured size
  toymodel::SecuredSet secured;
  double dd = 0.0;
  DistillReport report;
  std::optional<double> customization;
};

struct SweepTable {
  std::string kind;  // "placement" or "size"
  std::vector<std::string> benchmarks;
  std::vector<SweepRow> rows;

  nlohmann::json to_json() const;
  std::string csv() const;
};

// First `count` matrix blocks in layer order (Wq, Wk, Wv, Wo, mlp_up,
// mlp_down per layer).
toymodel::SecuredSet block_prefix(std::size_t count, std::size_t num_layers);
std::size_t matrix_blocks_per_layer();

// Secures layers start..start+window-1 for every start and attacks each.
SweepTable sweep_placement(const DecoderParams& victim, const Suite& suite, std::size_t window,
                           const SweepConfig& config, std::size_t jobs = 1);

// Bottom prefixes of the given sizes, counted in layers or matrix blocks.
SweepTable sweep_size(const DecoderParams& victim, const Suite& suite,
                      const std::vector<std::size_t>& sizes, toymodel::Granularity granularity,
                      const SweepConfig& config, std::size_t jobs = 1);

struct Correlation {
  std::string group;  // a benchmark name or "overall"
  std::size_t pairs = 0;
  double pearson = 0.0;
  double spearman = 0.0;
  bool defined = true;
  std::string note;
};

// Pairs DD(I) with R(I) per benchmark and DD(I) with ADR(I) overall. A group
// whose sample is constant is reported undefined (NaN). Fewer than three
// rows is an error.
std::vector<Correlation> dd_dr_correlation(const SweepTable& table);

// Same over bare columns; `ratios` is [benchmark][row]. NaN entries drop
// their pair.
std::vector<Correlation> dd_dr_correlation(const std::vector<std::string>& benchmarks,
                                           const std::vector<double>& dd,
                                           const std::vector<double>& adr,
                                           const std::vector<std::vector<double>>& ratios);

}  // namespace layerlock::harness

#endif  // LAYERLOCK_HARNESS_SWEEPS_HPP_
