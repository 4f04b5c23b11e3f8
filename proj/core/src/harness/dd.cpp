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

#include "layerlock/harness/dd.hpp"

#include <algorithm>
#include <stdexcept>

#include "layerlock/harness/streams.hpp"
#include "layerlock/numcore/parallel.hpp"

namespace layerlock::harness {
namespace {

double reinit_loss(const DecoderParams& victim, const toymodel::SecuredSet& secured,
                   const taskgen::Dataset& eval, std::uint64_t seed) {
  DecoderParams model = victim;
  toymodel::reinit_secured(model, secured, stream(seed, Purpose::kReinit));
  return evaluate(model, eval).loss;
}

double mean_of(const std::vector<double>& v) {
  double total = 0.0;
  for (double x : v) total += x;
  return total / static_cast<double>(v.size());
}

}  // namespace

nlohmann::json DDReport::to_json() const {
  nlohmann::json curve_j = nlohmann::json::array();
  for (const DDEntry& e : curve) {
    curve_j.push_back({{"prefix", e.prefix}, {"dd", e.mean}, {"per_seed", e.per_seed}});
  }
  nlohmann::json j = {{"seeds", seeds},
                      {"epsilon", epsilon},
                      {"dd_empty", dd_empty},
                      {"curve", curve_j},
                      {"dd_full", full.mean},
                      {"dd_full_per_seed", full.per_seed},
                      {"threshold", threshold()}};
  j["selected"] = selected ? nlohmann::json(*selected) : nlohmann::json();
  return j;
}

std::vector<std::uint64_t> unique_seeds(const std::vector<std::uint64_t>& seeds) {
  std::vector<std::uint64_t> out;
  for (std::uint64_t s : seeds) {
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  }
  return out;
}

double distillation_difficulty(const DecoderParams& victim, const toymodel::SecuredSet& secured,
                               const taskgen::Dataset& eval,
                               const std::vector<std::uint64_t>& seeds,
                               std::vector<double>* per_seed, std::size_t jobs) {
  const auto uniq = unique_seeds(seeds);
  if (uniq.empty()) throw std::invalid_argument("dd: no seeds");
  if (eval.count() == 0) throw std::invalid_argument("dd: empty evaluation set");
  auto losses = parallel_map(uniq.size(), jobs, [&](std::size_t i) {
    return reinit_loss(victim, secured, eval, uniq[i]);
  });
  const double m = mean_of(losses);
  if (per_seed) *per_seed = std::move(losses);
  return m;
}

DDReport compute_dd(const DecoderParams& victim, const taskgen::Dataset& eval,
                    const DDConfig& config, std::vector<std::size_t> prefixes, std::size_t jobs) {
  const std::size_t num_layers = victim.config.layers;
  if (!(config.epsilon >= 0.0 && config.epsilon <= 1.0)) {
    throw std::invalid_argument("dd: epsilon must lie in [0, 1]");
  }
  if (eval.count() == 0) throw std::invalid_argument("dd: empty evaluation set");
  if (prefixes.empty()) {
    for (std::size_t l = 1; l <= num_layers; ++l) prefixes.push_back(l);
  }
  std::sort(prefixes.begin(), prefixes.end());
  prefixes.erase(std::unique(prefixes.begin(), prefixes.end()), prefixes.end());

  DDReport rep;
  rep.seeds = unique_seeds(config.seeds);
  if (rep.seeds.empty()) throw std::invalid_argument("dd: no seeds");
  rep.epsilon = config.epsilon;
  rep.dd_empty = evaluate(victim, eval).loss;

  // Flatten (prefix, seed) pairs plus the full set into one job list.
  const std::size_t ns = rep.seeds.size();
  const std::size_t rows = prefixes.size() + 1;
  auto losses = parallel_map(rows * ns, jobs, [&](std::size_t idx) {
    const std::size_t r = idx / ns;
    const std::size_t count = r < prefixes.size() ? prefixes[r] : num_layers;
    return reinit_loss(victim, toymodel::SecuredSet::prefix(count, num_layers), eval,
                       rep.seeds[idx % ns]);
  });
  for (std::size_t r = 0; r < rows; ++r) {
    DDEntry e;
    e.prefix = r < prefixes.size() ? prefixes[r] : num_layers;
    e.per_seed.assign(losses.begin() + static_cast<std::ptrdiff_t>(r * ns),
                      losses.begin() + static_cast<std::ptrdiff_t>((r + 1) * ns));
    e.mean = mean_of(e.per_seed);
    if (r < prefixes.size()) {
      rep.curve.push_back(std::move(e));
    } else {
      rep.full = std::move(e);
    }
  }
  for (const DDEntry& e : rep.curve) {
    if (e.mean >= rep.threshold()) {
      rep.selected = e.prefix;
      break;
    }
  }
  return rep;
}

std::optional<std::size_t> select_prefix(const std::vector<double>& curve, double full,
                                         double epsilon) {
  const double threshold = (1.0 - epsilon) * full;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    if (curve[i] >= threshold) return i + 1;
  }
  return std::nullopt;
}

SolidChoice solid_select(const DDReport& dd, std::size_t num_layers) {
  SolidChoice c;
  c.prefix = dd.selected;
  if (dd.selected) {
    c.secured = toymodel::SecuredSet::prefix(*dd.selected, num_layers);
  } else {
    c.secured = toymodel::SecuredSet::all(num_layers);
    c.fallback = true;
    c.warning = "no prefix reached (1-eps)*DD([L]); securing every layer";
  }
  return c;
}

}  // namespace layerlock::harness
