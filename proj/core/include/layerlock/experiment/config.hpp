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

#ifndef LAYERLOCK_EXPERIMENT_CONFIG_HPP_
#define LAYERLOCK_EXPERIMENT_CONFIG_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "layerlock/harness/attack.hpp"
#include "layerlock/harness/customize.hpp"
#include "layerlock/harness/dd.hpp"
#include "layerlock/theory/collapse.hpp"
#include "layerlock/theory/contraction.hpp"

namespace layerlock::experiment {

enum class ErrorKind { kUsage, kConfig, kCheckpoint, kIo, kRuntime };

const char* error_kind_name(ErrorKind kind);

// Carries the single-line error category; usage and config errors exit 1,
// everything else 2.
class CliError : public std::runtime_error {
 public:
  CliError(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }
  int exit_code() const;

 private:
  ErrorKind kind_;
};

struct TaskSection {
  std::size_t modulus = 10;
  std::uint64_t markov_seed = 11;
  double markov_peak = 0.95;
  std::uint64_t eval_seed = 2024;
  std::size_t eval_count = taskgen::kDefaultEvalCount;
};

struct VictimSection {
  std::string checkpoint;  // empty: <out>/train-victim/victim.sold
  std::size_t steps = 3000;
  std::size_t batch = 64;
  autodiff::AdamConfig adam{.lr = 3e-3};
  std::size_t log_every = 100;
};

struct SweepSection {
  std::size_t window = 1;
  std::vector<std::size_t> sizes;  // empty: 0..L
  toymodel::Granularity granularity = toymodel::Granularity::kLayer;
  std::string kind = "placement";  // what `correlate` sweeps when given no input
};

struct TheorySection {
  std::size_t n = 8;
  std::size_t d = 16;
  std::size_t d_q = 4;
  double norm_budget = 0.1;
  std::size_t layers = 32;
  std::vector<double> alphas{0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95};
  std::size_t seed_count = 10;
  theory::DeepOptions deep;
  theory::BetaOptions beta;
  std::vector<double> beta_budgets{0.1, 0.5, 1.0, 2.0};
  double adversarial_budget = 2.0;
  std::size_t adversarial_replacements = 20;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::string output_dir;  // not part of the hash
  toymodel::DecoderConfig model{.seq_len = 16};
  TaskSection tasks;
  VictimSection victim;
  harness::AttackConfig attack;
  std::vector<harness::DeploymentStrategy> strategies;
  harness::DDConfig dd;
  harness::CustomizeConfig customize;
  SweepSection sweep;
  TheorySection theory;
  std::vector<std::string> sections;  // top-level keys the file declared

  bool has(const std::string& section) const;
  // Throws CliError(kConfig) naming the first absent section.
  void require(const std::vector<std::string>& needed) const;

  std::vector<taskgen::TaskSpec> task_specs() const;
  harness::Suite suite() const;
  harness::VictimConfig victim_config() const;

  // Every resolved field; object keys sorted, so the dump is canonical.
  nlohmann::json to_json(bool include_output_dir = true) const;
  // FNV-1a over the canonical dump without output_dir, as 16 hex digits.
  std::string hash() const;
};

// Unknown keys at any level are errors, as are wrong types.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

nlohmann::json strategy_to_json(const harness::DeploymentStrategy& s);
harness::DeploymentStrategy strategy_from_json(const nlohmann::json& j);

}  // namespace layerlock::experiment

#endif  // LAYERLOCK_EXPERIMENT_CONFIG_HPP_
