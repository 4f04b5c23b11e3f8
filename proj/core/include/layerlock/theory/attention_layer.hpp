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

#ifndef LAYERLOCK_THEORY_ATTENTION_LAYER_HPP_
#define LAYERLOCK_THEORY_ATTENTION_LAYER_HPP_

#include <cstddef>
#include <vector>

#include "layerlock/numcore/matrix.hpp"
#include "layerlock/numcore/rng.hpp"

namespace layerlock::theory {

// Key/query projections of one simplified attention layer, each d x d_Q.
struct AttnParams {
  Matrix key;
  Matrix query;

  // Rescales each projection whose operator 2-norm exceeds `norm_budget` back
  // onto the budget sphere.
  static AttnParams bounded(Matrix key, Matrix query, double norm_budget);
  // Xavier-initialized projections, unconstrained (the distilled replacement).
  static AttnParams xavier(std::size_t d, std::size_t d_q, Rng& rng);
  // Xavier directions rescaled to operator norm exactly `norm_budget`.
  static AttnParams random_bounded(std::size_t d, std::size_t d_q, double norm_budget, Rng& rng);

  std::size_t d() const { return key.rows(); }
  std::size_t d_q() const { return key.cols(); }
};

// L layers of the victim's simplified transformer plus the dimensions they
// act on. Every layer respects `norm_budget`.
struct TheoryStack {
  std::vector<AttnParams> layers;
  std::size_t n = 0;
  std::size_t d = 0;
  std::size_t d_q = 0;
  double norm_budget = 0.0;

  static TheoryStack random(std::size_t num_layers, std::size_t n, std::size_t d,
                            std::size_t d_q, double norm_budget, Rng& rng);
  // Throws if shapes disagree or a layer exceeds the budget.
  void validate() const;
};

// Row-stochastic attention matrix
//   softmax_rows(X Q (X K)^T / (sqrt(d_Q) * ||X||_F^2)).
// Throws on X == 0.
Matrix attention_matrix(const Matrix& x, const AttnParams& params);

// Normalized residual self-attention: X + attention_matrix(X) * X.
Matrix phi_layer(const Matrix& x, const AttnParams& params);

}  // namespace layerlock::theory

#endif  // LAYERLOCK_THEORY_ATTENTION_LAYER_HPP_
