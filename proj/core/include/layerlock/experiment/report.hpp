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

#ifndef LAYERLOCK_EXPERIMENT_REPORT_HPP_
#define LAYERLOCK_EXPERIMENT_REPORT_HPP_

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "layerlock/harness/attack.hpp"

namespace layerlock::experiment {

inline constexpr double kOrderingMargin = 0.15;   // DarkneTZ above SOLID
inline constexpr double kSolidToFullGap = 0.10;   // SOLID near fully secured
inline constexpr double kVictimAccuracyFloor = 0.90;

// Small models separate the strategies far less sharply than large ones; the
// DD to DR correlation measured on them stays above -0.33.
inline constexpr const char* kSmallModelCaveat =
    "small models are known to show weak separation between secured sets "
    "(DD/DR correlation coefficients above -0.33), so the large-model ordering "
    "need not hold at this scale";

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct OrderingChecks {
  std::vector<Check> checks;
  bool all_passed() const;
  // Empty when everything passed; otherwise names the violations and the caveat.
  std::string flag() const;
  nlohmann::json to_json() const;
};

// Checks ADR(DarkneTZ) >= ADR(SOLID) + margin and |ADR(SOLID) - ADR(full)| <= gap
// over reports keyed by strategy kind, plus the victim accuracy floor when
// `victim_accuracy` is given. Missing strategies are reported as failed checks.
OrderingChecks check_ordering(const std::vector<nlohmann::json>& reports,
                              std::optional<double> victim_accuracy);

// Markdown table with one column per strategy and one row per benchmark,
// followed by ADR and delta-ADR rows. Reports are DistillReport JSON.
std::string markdown_table(const std::vector<nlohmann::json>& reports);

}  // namespace layerlock::experiment

#endif  // LAYERLOCK_EXPERIMENT_REPORT_HPP_
