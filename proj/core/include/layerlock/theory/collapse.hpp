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

#ifndef LAYERLOCK_THEORY_COLLAPSE_HPP_
#define LAYERLOCK_THEORY_COLLAPSE_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "layerlock/numcore/matrix.hpp"
#include "layerlock/numcore/rng.hpp"
#include "layerlock/theory/attention_layer.hpp"

namespace layerlock::theory {

// Rank-one is declared only when both the worst column deviation and
// sigma_2 / sigma_1 fall below this.
inline constexpr double kCollapseTolerance = 1e-6;

// How layers past the end of the victim's list are produced.
enum class DepthMode {
  kCycle,     // layer i uses stack.layers[(i - 1) % L]
  kResample,  // layer i > L is a fresh bounded layer drawn from (resample_seed, i)
};

struct DeepOptions {
  double tol = 1e-10;
  std::size_t max_layers = 4096;
  DepthMode mode = DepthMode::kCycle;
  std::uint64_t resample_seed = 0;
};

// The attacked layer: 1-based depth index and the parameters the adversary
// substituted there.
struct SecuredLayer {
  std::size_t index = 1;
  AttnParams replacement;
};

struct CollapseReport {
  // Per column p: min over signs of || f[p] / ||f[p]|| -+ 1_n / sqrt(n) ||_2.
  std::vector<double> deviation_per_column;
  // sigma_2 / sigma_1 of the Frobenius-normalized output.
  double sigma_ratio = 0.0;
  std::size_t iterations_used = 0;
  bool converged = false;
  Matrix output;

  double max_deviation() const;
  double min_deviation() const;
  bool collapsed(double tol = kCollapseTolerance) const;
};

// Per-column deviation from the all-ones direction (sign-agnostic).
std::vector<double> column_deviations(const Matrix& x);

// Iterates the layer map with Frobenius renormalization after every layer
// (valid because each layer is positively homogeneous of degree one) until
// successive normalized iterates differ by less than `tol`, or `max_layers`
// is hit. Convergence is only tested once the whole stack and the secured
// layer have been applied.
CollapseReport deep_normalized_output(const Matrix& x0, const TheoryStack& stack,
                                      const std::optional<SecuredLayer>& secured,
                                      const DeepOptions& options = {});

// ceil(alpha * L) clamped into [1, L].
std::size_t secured_layer_for_alpha(double alpha, std::size_t num_layers);

// Produces the adversary's parameters for the secured layer.
using ReplacementFactory = std::function<AttnParams(std::size_t layer, Rng& rng)>;

// Xavier replacement of the stack's shape.
ReplacementFactory xavier_replacement(const TheoryStack& stack);

struct TransitionRun {
  double alpha = 0.0;
  std::uint64_t seed = 0;
  std::size_t secured_layer = 0;
  double realized_fraction = 0.0;
  double max_deviation = 0.0;
  double mean_deviation = 0.0;
  double sigma_ratio = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  bool collapsed = false;
};

struct TransitionSummary {
  double alpha = 0.0;
  std::size_t secured_layer = 0;
  double realized_fraction = 0.0;
  double mean_deviation = 0.0;
  std::size_t collapse_count = 0;
  std::size_t runs = 0;
  bool all_collapsed() const { return collapse_count == runs; }
};

struct TransitionSweep {
  std::vector<TransitionRun> runs;           // ordered by (alpha, seed)
  std::vector<TransitionSummary> summary;    // one per alpha, input order
};

// For every (alpha, seed): secure layer ceil(alpha * L) with a replacement
// drawn from Rng(seed) and report whether the infinite-depth output collapses.
TransitionSweep transition_sweep(const TheoryStack& stack, const Matrix& x0,
                                 const std::vector<double>& alphas,
                                 const std::vector<std::uint64_t>& seeds,
                                 const DeepOptions& options = {},
                                 ReplacementFactory replacement = nullptr,
                                 std::size_t jobs = 1);

}  // namespace layerlock::theory

#endif  // LAYERLOCK_THEORY_COLLAPSE_HPP_
