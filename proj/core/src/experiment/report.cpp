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

#include "layerlock/experiment/report.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "layerlock/numcore/format.hpp"

namespace layerlock::experiment {
namespace {

std::optional<double> adr_of(const std::vector<nlohmann::json>& reports, const std::string& kind) {
  for (const auto& r : reports) {
    if (r.value("kind", "") == kind && r["adr"].is_number()) return r["adr"].get<double>();
  }
  return std::nullopt;
}

std::string pct(double v) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(1);
  out << 100.0 * v;
  return out.str();
}

std::string column_title(const nlohmann::json& r) {
  const std::string kind = r.value("kind", "");
  if (kind == "solid") return "SOLID " + r.value("secured_label", "");
  if (kind == "darknetz") return "DarkneTZ";
  if (kind == "sap") return "SAP";
  if (kind == "sap-dp") return "SAP-DP";
  if (kind == "fully-secured") return "Fully-secured";
  return "Custom " + r.value("secured_label", "");
}

}  // namespace

bool OrderingChecks::all_passed() const {
  for (const Check& c : checks) {
    if (!c.passed) return false;
  }
  return true;
}

std::string OrderingChecks::flag() const {
  if (all_passed()) return {};
  std::string out = "DEVIATION:";
  for (const Check& c : checks) {
    if (!c.passed) out += " " + c.name + " (" + c.detail + ");";
  }
  out += " " + std::string(kSmallModelCaveat);
  return out;
}

nlohmann::json OrderingChecks::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const Check& c : checks) {
    arr.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  }
  return {{"checks", arr}, {"all_passed", all_passed()}, {"flag", flag()}};
}

OrderingChecks check_ordering(const std::vector<nlohmann::json>& reports,
                              std::optional<double> victim_accuracy) {
  OrderingChecks out;
  if (victim_accuracy) {
    out.checks.push_back({"victim accuracy >= 90%", *victim_accuracy >= kVictimAccuracyFloor,
                          "mixture accuracy " + pct(*victim_accuracy) + "%"});
  }
  const auto solid = adr_of(reports, "solid");
  const auto dark = adr_of(reports, "darknetz");
  const auto full = adr_of(reports, "fully-secured");
  Check order{"ADR(DarkneTZ) >= ADR(SOLID) + 15 pts", false, "missing strategy"};
  if (solid && dark) {
    order.passed = *dark >= *solid + kOrderingMargin;
    order.detail = "DarkneTZ " + pct(*dark) + "%, SOLID " + pct(*solid) + "%";
  }
  out.checks.push_back(order);
  Check gap{"|ADR(SOLID) - ADR(Fully-secured)| <= 10 pts", false, "missing strategy"};
  if (solid && full) {
    gap.passed = std::abs(*solid - *full) <= kSolidToFullGap;
    gap.detail = "SOLID " + pct(*solid) + "%, Fully-secured " + pct(*full) + "%";
  }
  out.checks.push_back(gap);
  return out;
}

std::string markdown_table(const std::vector<nlohmann::json>& reports) {
  std::ostringstream out;
  out << "| Benchmark |";
  for (const auto& r : reports) out << ' ' << column_title(r) << " |";
  out << "\n|---|";
  for (std::size_t i = 0; i < reports.size(); ++i) out << "---:|";
  out << '\n';
  std::vector<std::string> names;
  if (!reports.empty()) {
    for (const auto& b : reports.front()["benchmarks"]) names.push_back(b["name"]);
  }
  for (std::size_t i = 0; i < names.size(); ++i) {
    out << "| " << names[i] << " |";
    for (const auto& r : reports) {
      const auto& b = r["benchmarks"].at(i);
      out << ' ' << (b["excluded"].get<bool>() ? std::string("n/a") : pct(b["ratio"].get<double>()))
          << " |";
    }
    out << '\n';
  }
  out << "| ADR |";
  for (const auto& r : reports) {
    out << ' ' << (r["adr"].is_number() ? pct(r["adr"].get<double>()) : std::string("n/a")) << " |";
  }
  out << "\n| dADR |";
  for (const auto& r : reports) {
    out << ' '
        << (r["delta_adr"].is_number() ? pct(r["delta_adr"].get<double>()) : std::string("n/a"))
        << " |";
  }
  out << '\n';
  return out.str();
}

}  // namespace layerlock::experiment
