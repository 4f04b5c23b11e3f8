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

#include "layerlock/theory/collapse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "layerlock/numcore/linalg.hpp"
#include "layerlock/numcore/parallel.hpp"

namespace layerlock::theory {
namespace {

constexpr std::uint64_t kReplacementStream = 0x7265706cULL;  // "repl"

const AttnParams& layer_at(const TheoryStack& stack, std::size_t layer, const DeepOptions& opt,
                           std::optional<AttnParams>& scratch) {
  const std::size_t count = stack.layers.size();
  if (layer <= count || opt.mode == DepthMode::kCycle) {
    return stack.layers[(layer - 1) % count];
  }
  Rng rng(opt.resample_seed, layer);
  scratch = AttnParams::random_bounded(stack.d, stack.d_q, stack.norm_budget, rng);
  return *scratch;
}

}  // namespace

double CollapseReport::max_deviation() const {
  if (deviation_per_column.empty()) return 0.0;
  return *std::max_element(deviation_per_column.begin(), deviation_per_column.end());
}

double CollapseReport::min_deviation() const {
  if (deviation_per_column.empty()) return 0.0;
  return *std::min_element(deviation_per_column.begin(), deviation_per_column.end());
}

bool CollapseReport::collapsed(double tol) const {
  return max_deviation() < tol && sigma_ratio < tol;
}

std::vector<double> column_deviations(const Matrix& x) {
  const std::size_t n = x.rows();
  const double e = 1.0 / std::sqrt(static_cast<double>(n));
  std::vector<double> out(x.cols());
  for (std::size_t p = 0; p < x.cols(); ++p) {
    double norm2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) norm2 += x(i, p) * x(i, p);
    if (norm2 == 0.0) {
      out[p] = std::sqrt(2.0);  // no direction; treated as orthogonal
      continue;
    }
    const double inv = 1.0 / std::sqrt(norm2);
    double plus = 0.0, minus = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double y = x(i, p) * inv;
      plus += (y - e) * (y - e);
      minus += (y + e) * (y + e);
    }
    out[p] = std::sqrt(std::min(plus, minus));
  }
  return out;
}

CollapseReport deep_normalized_output(const Matrix& x0, const TheoryStack& stack,
                                      const std::optional<SecuredLayer>& secured,
                                      const DeepOptions& options) {
  if (stack.layers.empty()) throw std::invalid_argument("deep_normalized_output: empty stack");
  if (x0.cols() != stack.d) {
    throw std::invalid_argument("deep_normalized_output: X0 is " + x0.shape_string() +
                                " but the stack expects d = " + std::to_string(stack.d));
  }
  const double norm0 = frobenius_norm(x0);
  if (norm0 == 0.0) throw std::invalid_argument("deep_normalized_output: X0 = 0 is excluded");
  if (secured && secured->index == 0) {
    throw std::invalid_argument("deep_normalized_output: secured index is 1-based");
  }

  const std::size_t min_layers =
      std::max(stack.layers.size(), secured ? secured->index : std::size_t{0});
  Matrix x = x0 * (1.0 / norm0);
  CollapseReport report;
  std::optional<AttnParams> scratch;

  for (std::size_t layer = 1; layer <= options.max_layers; ++layer) {
    const AttnParams& params = (secured && layer == secured->index)
                                   ? secured->replacement
                                   : layer_at(stack, layer, options, scratch);
    Matrix y = phi_layer(x, params);
    const double ny = frobenius_norm(y);
    if (!(ny > 0.0) || !std::isfinite(ny)) {
      throw std::runtime_error("deep_normalized_output: degenerate iterate at layer " +
                               std::to_string(layer));
    }
    y *= 1.0 / ny;
    const double delta = frobenius_norm(y - x);
    x = std::move(y);
    report.iterations_used = layer;
    if (layer >= min_layers && delta < options.tol) {
      report.converged = true;
      break;
    }
  }

  report.deviation_per_column = column_deviations(x);
  report.sigma_ratio = sigma_ratio(x);
  report.output = std::move(x);
  return report;
}

std::size_t secured_layer_for_alpha(double alpha, std::size_t num_layers) {
  if (num_layers == 0) throw std::invalid_argument("secured_layer_for_alpha: no layers");
  // Guard against alpha * L landing a hair above an integer.
  const double scaled = alpha * static_cast<double>(num_layers);
  const double rounded = std::round(scaled);
  const double target = std::fabs(scaled - rounded) < 1e-9 ? rounded : std::ceil(scaled);
  const auto layer = static_cast<long long>(target);
  return static_cast<std::size_t>(std::clamp<long long>(layer, 1, static_cast<long long>(num_layers)));
}

ReplacementFactory xavier_replacement(const TheoryStack& stack) {
  const std::size_t d = stack.d;
  const std::size_t d_q = stack.d_q;
  return [d, d_q](std::size_t, Rng& rng) { return AttnParams::xavier(d, d_q, rng); };
}

TransitionSweep transition_sweep(const TheoryStack& stack, const Matrix& x0,
                                 const std::vector<double>& alphas,
                                 const std::vector<std::uint64_t>& seeds,
                                 const DeepOptions& options, ReplacementFactory replacement,
                                 std::size_t jobs) {
  for (double a : alphas) {
    if (!(a > 0.0 && a < 1.0)) {
      throw std::invalid_argument("transition_sweep: alpha " + std::to_string(a) +
                                  " outside (0, 1)");
    }
  }
  if (!replacement) replacement = xavier_replacement(stack);
  const std::size_t num_layers = stack.layers.size();

  auto runs = parallel_map(alphas.size() * seeds.size(), jobs, [&](std::size_t idx) {
    const double alpha = alphas[idx / seeds.size()];
    const std::uint64_t seed = seeds[idx % seeds.size()];
    TransitionRun run;
    run.alpha = alpha;
    run.seed = seed;
    run.secured_layer = secured_layer_for_alpha(alpha, num_layers);
    run.realized_fraction =
        static_cast<double>(run.secured_layer) / static_cast<double>(num_layers);
    Rng rng(seed, kReplacementStream);
    SecuredLayer secured{run.secured_layer, replacement(run.secured_layer, rng)};
    const CollapseReport rep = deep_normalized_output(x0, stack, secured, options);
    run.max_deviation = rep.max_deviation();
    run.mean_deviation =
        std::accumulate(rep.deviation_per_column.begin(), rep.deviation_per_column.end(), 0.0) /
        static_cast<double>(rep.deviation_per_column.size());
    run.sigma_ratio = rep.sigma_ratio;
    run.iterations = rep.iterations_used;
    run.converged = rep.converged;
    run.collapsed = rep.collapsed();
    return run;
  });

  TransitionSweep sweep;
  for (std::size_t a = 0; a < alphas.size(); ++a) {
    TransitionSummary s;
    s.alpha = alphas[a];
    s.secured_layer = secured_layer_for_alpha(alphas[a], num_layers);
    s.realized_fraction = static_cast<double>(s.secured_layer) / static_cast<double>(num_layers);
    double total = 0.0;
    for (std::size_t k = 0; k < seeds.size(); ++k) {
      const auto& r = runs[a * seeds.size() + k];
      total += r.max_deviation;
      s.collapse_count += r.collapsed ? 1 : 0;
      ++s.runs;
    }
    s.mean_deviation = seeds.empty() ? 0.0 : total / static_cast<double>(seeds.size());
    sweep.summary.push_back(s);
  }
  sweep.runs = std::move(runs);
  return sweep;
}

}  // namespace layerlock::theory
