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

#ifndef LAYERLOCK_THEORY_CONTRACTION_HPP_
#define LAYERLOCK_THEORY_CONTRACTION_HPP_

#include <cstddef>
#include <vector>

#include "layerlock/numcore/matrix.hpp"
#include "layerlock/numcore/rng.hpp"
#include "layerlock/theory/attention_layer.hpp"

namespace layerlock::theory {

// Largest gain of M on the complement of 1_n: max over unit v orthogonal to
// 1_n of ||M v||_2, i.e. sigma_max(M (I - 1 1^T / n)).
double complement_gain(const Matrix& attention);

struct BetaOptions {
  std::size_t restarts = 32;
  std::size_t ascent_steps = 200;
  double fd_step = 1e-5;
};

// Best contraction factor found. `value` is realized by (params, x, v), so it
// is a certified lower bound on the supremum, never an upper bound.
struct BetaEstimate {
  double value = 0.0;
  AttnParams params;
  Matrix x;
  Matrix v;
};

// Multi-restart projected ascent on (K, Q, X, v): a power step on v inside
// the 1_n-complement alternates with a central finite-difference ascent step
// on K, Q and X; K and Q are pulled back into the operator-norm ball of
// radius `norm_budget` after every step. Returns a value in [0, 1).
BetaEstimate estimate_beta(std::size_t n, std::size_t d, std::size_t d_q, double norm_budget,
                           Rng& rng, const BetaOptions& options = {});

// log2(2 / (1 + beta)). Throws unless 0 <= beta < 1.
double alpha_star(double beta);

// Non-collapsing victim: K* = Q* and X* = [v*, ..., v*] with v* a unit
// vector orthogonal to 1_n.
//
// v* is restricted to the mirror family (e_i - e_j) / sqrt(2). Inside that
// family 1^T M(X*) v* = 0 holds for every attention layer, whatever its
// parameters, so the 1_n component of X* stays exactly zero at any depth. The
// projections maximize the score scale within the norm ball, which maximizes
// ||M v*|| over the family.
struct AdversarialConstruction {
  AttnParams params;
  Matrix x;             // n x d, every column equal to v
  Matrix v;             // n x 1
  std::size_t pair_first = 0;
  std::size_t pair_second = 1;
  double gain = 0.0;    // ||M(X*) v*||_2 under (K*, Q*)
};

AdversarialConstruction adversarial_construction(std::size_t n, std::size_t d, std::size_t d_q,
                                                 double norm_budget, Rng& rng);

// Stack of `num_layers` copies of the adversarial projections.
TheoryStack adversarial_stack(const AdversarialConstruction& adv, std::size_t num_layers,
                              double norm_budget);

struct DoublingProbe {
  // |1^T phi(X)[p]| / |1^T X[p]|; NaN where skipped.
  std::vector<double> ratio;
  // Columns whose 1-component vanishes (relative to the column norm).
  std::vector<bool> skipped;
};

DoublingProbe doubling_ratio_probe(const Matrix& x, const AttnParams& params);

// sqrt(1 - 1 / sqrt(1 + x^2)) <= x.
bool technical_inequality_holds(double x);

// Checks the inequality at 1e-12, 1 - 1e-12 and `samples` uniform draws on (0, 1).
bool technical_inequality_check(std::size_t samples, Rng& rng);

}  // namespace layerlock::theory

#endif  // LAYERLOCK_THEORY_CONTRACTION_HPP_
