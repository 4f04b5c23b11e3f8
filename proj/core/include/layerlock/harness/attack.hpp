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

#ifndef LAYERLOCK_HARNESS_ATTACK_HPP_
#define LAYERLOCK_HARNESS_ATTACK_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "layerlock/harness/training.hpp"
#include "layerlock/toymodel/secured_set.hpp"

namespace layerlock::harness {

using toymodel::SecuredSet;

enum class StrategyKind { kSolid, kDarkneTZ, kSap, kSapDp, kFullySecured, kCustom };

const char* strategy_name(StrategyKind kind);
std::optional<StrategyKind> parse_strategy(const std::string& name);

// SAP keeps the bottom six of 32 layers open; scaled to depth L.
std::size_t sap_open_layers(std::size_t num_layers);

inline constexpr double kSapDpNoise = 0.5;

struct DeploymentStrategy {
  StrategyKind kind = StrategyKind::kFullySecured;
  std::size_t solid_layers = 0;       // SOLID: secure 1..l
  std::optional<std::size_t> open_k;  // SAP/SAP-DP: defaults to sap_open_layers(L)
  double noise_scale = kSapDpNoise;   // SAP-DP only
  std::optional<SecuredSet> custom;

  static DeploymentStrategy solid(std::size_t l);
  static DeploymentStrategy darknetz();
  static DeploymentStrategy sap(std::optional<std::size_t> open_k = std::nullopt);
  static DeploymentStrategy sap_dp(double noise_scale = kSapDpNoise,
                                   std::optional<std::size_t> open_k = std::nullopt);
  static DeploymentStrategy fully_secured();
  static DeploymentStrategy of(SecuredSet set);

  SecuredSet secured_set(std::size_t num_layers) const;
  // Laplace scale added to every queried logit.
  double output_noise() const { return kind == StrategyKind::kSapDp ? noise_scale : 0.0; }
  std::string label() const;
};

enum class AttackKind { kFtAll, kFtClosed, kSem };

const char* attack_name(AttackKind kind);
std::optional<AttackKind> parse_attack(const std::string& name);

struct AttackConfig {
  AttackKind kind = AttackKind::kFtAll;
  std::size_t queries = 4096;
  // 0 picks the default: 5 for FT-all / FT-closed, 30 for SEM.
  std::size_t epochs = 0;
  std::size_t batch = 64;
  autodiff::AdamConfig adam;
  std::vector<std::uint64_t> seeds{20, 42, 1234};
  bool hard_labels = false;  // argmax of the victim logits instead of its softmax

  std::size_t effective_epochs() const;
};

struct BenchmarkScore {
  std::string name;
  double victim = 0.0;
  std::vector<double> distilled_per_seed;
  double distilled = 0.0;  // mean over seeds
  double ratio = 0.0;      // distilled / victim
  bool excluded = false;   // victim score 0: ratio undefined
};

struct DistillReport {
  std::string kind;      // strategy_name of the deployment
  std::string strategy;  // label with parameters, e.g. "solid(2)"
  SecuredSet secured;
  std::string attack;
  std::size_t epochs = 0;
  std::size_t queries = 0;
  double noise_scale = 0.0;
  std::vector<std::uint64_t> seeds;
  std::optional<std::size_t> tap_layer;
  bool trained = true;  // false when nothing was secured
  std::vector<BenchmarkScore> benchmarks;
  double adr = 0.0;
  std::optional<double> delta_adr;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
};

// Victim accuracy per benchmark.
std::vector<double> victim_scores(const DecoderParams& victim, const Suite& suite);

// One attacker run: query the victim, re-initialize the secured tensors from
// Rng(seed, reinit) and train per the attack kind. Returns the replica.
DecoderParams distill_replica(const DecoderParams& victim, const Suite& suite,
                              const SecuredSet& secured, double noise_scale,
                              const AttackConfig& attack, std::uint64_t seed);

// Distillation attack against `strategy`. Seeds run in parallel over `jobs`
// workers and merge in seed order. Nothing secured means the replica is the
// victim itself and no training happens.
DistillReport run_attack(const DecoderParams& victim, const Suite& suite,
                         const DeploymentStrategy& strategy, const AttackConfig& attack,
                         std::size_t jobs = 1);

// Sets delta_adr = adr - baseline.adr.
void attach_delta(DistillReport& report, const DistillReport& fully_secured);

// One CSV row per (benchmark, seed).
std::string csv_header();
std::string csv_rows(const DistillReport& report);

}  // namespace layerlock::harness

#endif  // LAYERLOCK_HARNESS_ATTACK_HPP_
