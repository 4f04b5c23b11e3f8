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

#include "layerlock/harness/attack.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "layerlock/harness/streams.hpp"
#include "layerlock/numcore/format.hpp"
#include "layerlock/numcore/parallel.hpp"

namespace layerlock::harness {
namespace {

std::string quoted(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

const char* strategy_name(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::kSolid: return "solid";
    case StrategyKind::kDarkneTZ: return "darknetz";
    case StrategyKind::kSap: return "sap";
    case StrategyKind::kSapDp: return "sap-dp";
    case StrategyKind::kFullySecured: return "fully-secured";
    case StrategyKind::kCustom: return "custom";
  }
  return "unknown";
}

std::optional<StrategyKind> parse_strategy(const std::string& name) {
  for (StrategyKind k : {StrategyKind::kSolid, StrategyKind::kDarkneTZ, StrategyKind::kSap,
                         StrategyKind::kSapDp, StrategyKind::kFullySecured, StrategyKind::kCustom}) {
    if (name == strategy_name(k)) return k;
  }
  return std::nullopt;
}

std::size_t sap_open_layers(std::size_t num_layers) {
  const auto k = static_cast<std::size_t>(std::llround(6.0 * static_cast<double>(num_layers) / 32.0));
  return std::max<std::size_t>(1, k);
}

DeploymentStrategy DeploymentStrategy::solid(std::size_t l) {
  DeploymentStrategy s;
  s.kind = StrategyKind::kSolid;
  s.solid_layers = l;
  return s;
}

DeploymentStrategy DeploymentStrategy::darknetz() {
  DeploymentStrategy s;
  s.kind = StrategyKind::kDarkneTZ;
  return s;
}

DeploymentStrategy DeploymentStrategy::sap(std::optional<std::size_t> open_k) {
  DeploymentStrategy s;
  s.kind = StrategyKind::kSap;
  s.open_k = open_k;
  return s;
}

DeploymentStrategy DeploymentStrategy::sap_dp(double noise_scale, std::optional<std::size_t> open_k) {
  if (noise_scale < 0.0) throw std::invalid_argument("sap-dp: negative noise scale");
  DeploymentStrategy s;
  s.kind = StrategyKind::kSapDp;
  s.noise_scale = noise_scale;
  s.open_k = open_k;
  return s;
}

DeploymentStrategy DeploymentStrategy::fully_secured() { return {}; }

DeploymentStrategy DeploymentStrategy::of(SecuredSet set) {
  DeploymentStrategy s;
  s.kind = StrategyKind::kCustom;
  s.custom = std::move(set);
  return s;
}

SecuredSet DeploymentStrategy::secured_set(std::size_t num_layers) const {
  switch (kind) {
    case StrategyKind::kSolid:
      if (solid_layers == 0 || solid_layers > num_layers) {
        throw std::out_of_range("solid: prefix length " + std::to_string(solid_layers) +
                                " outside 1.." + std::to_string(num_layers));
      }
      return SecuredSet::prefix(solid_layers, num_layers);
    case StrategyKind::kDarkneTZ:
      return SecuredSet::of_layers({num_layers}, num_layers);
    case StrategyKind::kSap:
    case StrategyKind::kSapDp: {
      const std::size_t open = open_k.value_or(sap_open_layers(num_layers));
      if (open >= num_layers) throw std::out_of_range("sap: open_k must be below L");
      std::vector<std::size_t> layers;
      for (std::size_t l = open + 1; l <= num_layers; ++l) layers.push_back(l);
      return SecuredSet::of_layers(std::move(layers), num_layers);
    }
    case StrategyKind::kFullySecured:
      return SecuredSet::all(num_layers);
    case StrategyKind::kCustom:
      if (!custom) throw std::invalid_argument("custom strategy without a secured set");
      if (custom->num_layers() != num_layers) {
        throw std::invalid_argument("custom secured set built for a different depth");
      }
      return *custom;
  }
  throw std::logic_error("unknown strategy");
}

std::string DeploymentStrategy::label() const {
  std::string s = strategy_name(kind);
  if (kind == StrategyKind::kSolid) s += "(" + std::to_string(solid_layers) + ")";
  if (kind == StrategyKind::kSapDp) s += "(" + format_real(noise_scale, 6) + ")";
  if (kind == StrategyKind::kCustom && custom) s += custom->describe();
  return s;
}

const char* attack_name(AttackKind kind) {
  switch (kind) {
    case AttackKind::kFtAll: return "ft-all";
    case AttackKind::kFtClosed: return "ft-closed";
    case AttackKind::kSem: return "sem";
  }
  return "unknown";
}

std::optional<AttackKind> parse_attack(const std::string& name) {
  for (AttackKind k : {AttackKind::kFtAll, AttackKind::kFtClosed, AttackKind::kSem}) {
    if (name == attack_name(k)) return k;
  }
  return std::nullopt;
}

std::size_t AttackConfig::effective_epochs() const {
  if (epochs) return epochs;
  return kind == AttackKind::kSem ? 30 : 5;
}

nlohmann::json DistillReport::to_json() const {
  nlohmann::json bench = nlohmann::json::array();
  for (const BenchmarkScore& b : benchmarks) {
    bench.push_back({{"name", b.name},
                     {"victim", b.victim},
                     {"distilled", b.distilled},
                     {"distilled_per_seed", b.distilled_per_seed},
                     {"ratio", b.ratio},
                     {"excluded", b.excluded}});
  }
  nlohmann::json j = {{"kind", kind},
                      {"strategy", strategy},
                      {"secured", secured.to_json()},
                      {"secured_label", secured.describe()},
                      {"attack", attack},
                      {"epochs", epochs},
                      {"queries", queries},
                      {"noise_scale", noise_scale},
                      {"seeds", seeds},
                      {"trained", trained},
                      {"benchmarks", bench},
                      {"adr", adr},
                      {"warnings", warnings}};
  j["tap_layer"] = tap_layer ? nlohmann::json(*tap_layer) : nlohmann::json();
  j["delta_adr"] = delta_adr ? nlohmann::json(*delta_adr) : nlohmann::json();
  return j;
}

std::vector<double> victim_scores(const DecoderParams& victim, const Suite& suite) {
  std::vector<double> out;
  for (const Benchmark& b : suite.benchmarks) out.push_back(evaluate(victim, b.eval).accuracy);
  return out;
}

DecoderParams distill_replica(const DecoderParams& victim, const Suite& suite,
                              const SecuredSet& secured, double noise_scale,
                              const AttackConfig& attack, std::uint64_t seed) {
  DecoderParams replica = victim;
  if (secured.empty()) return replica;
  const toymodel::Partition part = toymodel::partition(victim, secured);
  const FitConfig fit{attack.effective_epochs(), attack.batch, attack.adam};
  const LossKind loss = attack.hard_labels ? LossKind::kArgmaxLabels : LossKind::kSoftLabels;

  Rng data_rng = stream(seed, Purpose::kAttackData);
  const taskgen::Dataset queries =
      taskgen::generate_mixture(suite.specs, attack.queries, data_rng, suite.eval_hashes);
  Rng noise_rng = stream(seed, Purpose::kAttackNoise);
  const std::optional<std::size_t> tap =
      attack.kind == AttackKind::kSem ? secured.tap_layer() : std::nullopt;
  const taskgen::Dataset queried = taskgen::query_victim(victim, queries, noise_scale, tap, noise_rng);

  toymodel::reinit_secured(replica, secured, stream(seed, Purpose::kReinit));
  Rng shuffle = stream(seed, Purpose::kShuffle);
  switch (attack.kind) {
    case AttackKind::kFtAll:
      fit_outputs(replica, queried, loss, fit, {}, shuffle);
      break;
    case AttackKind::kFtClosed:
      fit_outputs(replica, queried, loss, fit, part.freeze_unsecured(), shuffle);
      break;
    case AttackKind::kSem:
      fit_representations(replica, representation_view(queried), fit, part.freeze_unsecured(),
                          shuffle);
      break;
  }
  return replica;
}

DistillReport run_attack(const DecoderParams& victim, const Suite& suite,
                         const DeploymentStrategy& strategy, const AttackConfig& attack,
                         std::size_t jobs) {
  if (attack.queries == 0) throw std::invalid_argument("attack: empty attack set");
  if (attack.seeds.empty()) throw std::invalid_argument("attack: no seeds");
  const std::size_t num_layers = victim.config.layers;

  DistillReport rep;
  rep.kind = strategy_name(strategy.kind);
  rep.strategy = strategy.label();
  rep.secured = strategy.secured_set(num_layers);
  rep.attack = attack_name(attack.kind);
  rep.epochs = attack.effective_epochs();
  rep.queries = attack.queries;
  rep.noise_scale = strategy.output_noise();
  rep.seeds = attack.seeds;
  rep.tap_layer = rep.secured.tap_layer();

  const toymodel::Partition part = toymodel::partition(victim, rep.secured);
  if (attack.kind == AttackKind::kFtClosed && !rep.secured.empty() && part.unsecured.empty()) {
    throw std::invalid_argument("ft-closed: nothing is left unsecured to freeze");
  }
  if (!rep.secured.is_bottom_prefix() && rep.tap_layer) {
    rep.warnings.push_back("secured set is not a bottom prefix; representation tap at layer " +
                           std::to_string(*rep.tap_layer));
  }

  const std::vector<double> victim_acc = victim_scores(victim, suite);
  std::vector<std::vector<double>> per_seed;  // [seed][benchmark]
  if (rep.secured.empty()) {
    rep.trained = false;
    rep.warnings.push_back("nothing secured: the replica is the victim, no training");
    per_seed.assign(attack.seeds.size(), victim_acc);
  } else {
    per_seed = parallel_map(attack.seeds.size(), jobs, [&](std::size_t i) {
      const DecoderParams replica = distill_replica(victim, suite, rep.secured, rep.noise_scale,
                                                    attack, attack.seeds[i]);
      return victim_scores(replica, suite);
    });
  }

  double total = 0.0;
  std::size_t used = 0;
  for (std::size_t b = 0; b < suite.benchmarks.size(); ++b) {
    BenchmarkScore s;
    s.name = suite.benchmarks[b].name;
    s.victim = victim_acc[b];
    for (const auto& row : per_seed) s.distilled_per_seed.push_back(row[b]);
    double mean = 0.0;
    for (double v : s.distilled_per_seed) mean += v;
    s.distilled = mean / static_cast<double>(s.distilled_per_seed.size());
    if (s.victim == 0.0) {
      s.excluded = true;
      rep.warnings.push_back("benchmark " + s.name + " excluded: victim score is 0");
    } else {
      // Nothing secured: the ratio is 1 by construction.
      s.ratio = rep.trained ? s.distilled / s.victim : 1.0;
      total += s.ratio;
      ++used;
    }
    rep.benchmarks.push_back(std::move(s));
  }
  if (used == 0) {
    rep.adr = std::nan("");
    rep.warnings.push_back("no benchmark with a nonzero victim score");
  } else {
    rep.adr = total / static_cast<double>(used);
  }
  return rep;
}

void attach_delta(DistillReport& report, const DistillReport& fully_secured) {
  report.delta_adr = report.adr - fully_secured.adr;
}

std::string csv_header() {
  return "strategy,secured,attack,benchmark,seed,victim_score,distilled_score,ratio,adr,delta_adr";
}

std::string csv_rows(const DistillReport& r) {
  std::string out;
  for (const BenchmarkScore& b : r.benchmarks) {
    for (std::size_t i = 0; i < r.seeds.size(); ++i) {
      const double d = b.distilled_per_seed[i];
      const double ratio = b.excluded ? std::nan("") : (r.trained ? d / b.victim : 1.0);
      out += quoted(r.strategy) + "," + quoted(r.secured.describe()) + "," + r.attack + "," +
             b.name + "," + std::to_string(r.seeds[i]) + "," + format_real(b.victim) + "," +
             format_real(d) + "," + format_real(ratio) + "," + format_real(r.adr) + "," +
             (r.delta_adr ? format_real(*r.delta_adr) : std::string()) + "\n";
    }
  }
  return out;
}

}  // namespace layerlock::harness
