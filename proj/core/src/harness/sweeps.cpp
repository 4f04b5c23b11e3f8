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

#include "layerlock/harness/sweeps.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "layerlock/harness/dd.hpp"
#include "layerlock/numcore/format.hpp"
#include "layerlock/numcore/stats.hpp"

namespace layerlock::harness {
namespace {

constexpr toymodel::Block kMatrixBlocks[] = {
    toymodel::Block::kWq,     toymodel::Block::kWk,     toymodel::Block::kWv,
    toymodel::Block::kWo,     toymodel::Block::kMlpUp,  toymodel::Block::kMlpDown,
};

SweepRow run_row(const DecoderParams& victim, const Suite& suite, std::size_t index,
                 toymodel::SecuredSet set, const SweepConfig& config, bool with_custom,
                 std::size_t jobs) {
  SweepRow row;
  row.index = index;
  row.secured = set;
  row.dd = distillation_difficulty(victim, set, suite.combined_eval(), config.dd_seeds, nullptr,
                                   jobs);
  row.report = run_attack(victim, suite, DeploymentStrategy::of(set), config.attack, jobs);
  if (with_custom && config.customize) {
    row.customization = customize(victim, set, *config.customize, suite.specs).accuracy;
  }
  return row;
}

std::vector<std::string> benchmark_names(const Suite& suite) {
  std::vector<std::string> out;
  for (const Benchmark& b : suite.benchmarks) out.push_back(b.name);
  return out;
}

}  // namespace

std::size_t matrix_blocks_per_layer() { return std::size(kMatrixBlocks); }

toymodel::SecuredSet block_prefix(std::size_t count, std::size_t num_layers) {
  const std::size_t per = matrix_blocks_per_layer();
  if (count > per * num_layers) {
    throw std::out_of_range("block_prefix: " + std::to_string(count) + " blocks exceed the model");
  }
  std::vector<toymodel::BlockRef> blocks;
  for (std::size_t i = 0; i < count; ++i) blocks.push_back({i / per + 1, kMatrixBlocks[i % per]});
  return toymodel::SecuredSet::of_blocks(std::move(blocks), num_layers);
}

SweepTable sweep_placement(const DecoderParams& victim, const Suite& suite, std::size_t window,
                           const SweepConfig& config, std::size_t jobs) {
  const std::size_t num_layers = victim.config.layers;
  if (window == 0 || window > num_layers) {
    throw std::invalid_argument("sweep_placement: window must lie in 1.." +
                                std::to_string(num_layers));
  }
  SweepTable t;
  t.kind = "placement";
  t.benchmarks = benchmark_names(suite);
  for (std::size_t start = 1; start + window - 1 <= num_layers; ++start) {
    std::vector<std::size_t> layers;
    for (std::size_t l = start; l < start + window; ++l) layers.push_back(l);
    t.rows.push_back(run_row(victim, suite, start,
                             toymodel::SecuredSet::of_layers(layers, num_layers), config, false,
                             jobs));
  }
  return t;
}

SweepTable sweep_size(const DecoderParams& victim, const Suite& suite,
                      const std::vector<std::size_t>& sizes, toymodel::Granularity granularity,
                      const SweepConfig& config, std::size_t jobs) {
  const std::size_t num_layers = victim.config.layers;
  if (sizes.empty()) throw std::invalid_argument("sweep_size: no sizes");
  SweepTable t;
  t.kind = "size";
  t.benchmarks = benchmark_names(suite);
  for (std::size_t size : sizes) {
    toymodel::SecuredSet set;
    if (granularity == toymodel::Granularity::kLayer) {
      if (size > num_layers) throw std::out_of_range("sweep_size: size beyond the model depth");
      set = toymodel::SecuredSet::prefix(size, num_layers);
    } else if (size == matrix_blocks_per_layer() * num_layers) {
      set = toymodel::SecuredSet::all(num_layers);
    } else {
      set = block_prefix(size, num_layers);
    }
    t.rows.push_back(run_row(victim, suite, size, set, config, true, jobs));
  }
  return t;
}

nlohmann::json SweepTable::to_json() const {
  nlohmann::json rows_j = nlohmann::json::array();
  for (const SweepRow& r : rows) {
    nlohmann::json j = {{"index", r.index},
                        {"secured", r.secured.describe()},
                        {"dd", r.dd},
                        {"report", r.report.to_json()}};
    j["customization"] = r.customization ? nlohmann::json(*r.customization) : nlohmann::json();
    rows_j.push_back(std::move(j));
  }
  return {{"kind", kind}, {"benchmarks", benchmarks}, {"rows", rows_j}};
}

std::string SweepTable::csv() const {
  std::ostringstream out;
  out << (kind == "placement" ? "start" : "size") << ",secured,dd,adr";
  for (const std::string& b : benchmarks) out << ",ratio_" << b;
  out << ",customization\n";
  for (const SweepRow& r : rows) {
    out << r.index << ",\"" << r.secured.describe() << "\"," << format_real(r.dd) << ','
        << format_real(r.report.adr);
    for (const BenchmarkScore& s : r.report.benchmarks) {
      out << ',' << (s.excluded ? std::string("nan") : format_real(s.ratio));
    }
    out << ',' << (r.customization ? format_real(*r.customization) : std::string()) << '\n';
  }
  return out.str();
}

std::vector<Correlation> dd_dr_correlation(const std::vector<std::string>& benchmarks,
                                           const std::vector<double>& dd,
                                           const std::vector<double>& adr,
                                           const std::vector<std::vector<double>>& ratios) {
  if (dd.size() < 3) {
    throw DegenerateSample("correlation: need at least 3 sweep rows, got " +
                           std::to_string(dd.size()));
  }
  if (adr.size() != dd.size() || ratios.size() != benchmarks.size()) {
    throw std::invalid_argument("correlation: DD and DR tables do not match");
  }
  auto correlate = [&](std::string group, const std::vector<double>& y) {
    if (y.size() != dd.size()) throw std::invalid_argument("correlation: column length mismatch");
    std::vector<double> a, b;
    for (std::size_t i = 0; i < dd.size(); ++i) {
      if (std::isnan(dd[i]) || std::isnan(y[i])) continue;
      a.push_back(dd[i]);
      b.push_back(y[i]);
    }
    Correlation c;
    c.group = std::move(group);
    c.pairs = a.size();
    try {
      c.pearson = pearson(a, b);
      c.spearman = spearman(a, b);
    } catch (const DegenerateSample& e) {
      c.defined = false;
      c.pearson = c.spearman = std::nan("");
      c.note = e.what();
    }
    return c;
  };
  std::vector<Correlation> out;
  for (std::size_t b = 0; b < benchmarks.size(); ++b) {
    out.push_back(correlate(benchmarks[b], ratios[b]));
  }
  out.push_back(correlate("overall", adr));
  return out;
}

std::vector<Correlation> dd_dr_correlation(const SweepTable& table) {
  std::vector<double> dd, adr;
  std::vector<std::vector<double>> ratios(table.benchmarks.size());
  for (const SweepRow& r : table.rows) {
    dd.push_back(r.dd);
    adr.push_back(r.report.adr);
    for (std::size_t b = 0; b < ratios.size(); ++b) {
      const BenchmarkScore& s = r.report.benchmarks.at(b);
      ratios[b].push_back(s.excluded ? std::nan("") : s.ratio);
    }
  }
  return dd_dr_correlation(table.benchmarks, dd, adr, ratios);
}

}  // namespace layerlock::harness
