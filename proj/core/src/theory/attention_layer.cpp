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

#include "layerlock/theory/attention_layer.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "layerlock/numcore/linalg.hpp"
#include "layerlock/numcore/sampling.hpp"

namespace layerlock::theory {
namespace {

// Slack for the budget check: the power iteration is converged to ~1e-10.
constexpr double kBudgetSlack = 1e-8;

Matrix rescale_to_budget(Matrix m, double budget) {
  const double norm = spectral_norm(m).value;
  if (norm > budget && norm > 0.0) m *= budget / norm;
  return m;
}

Matrix rescale_exactly(Matrix m, double budget) {
  const double norm = spectral_norm(m).value;
  if (norm == 0.0) return m;
  m *= budget / norm;
  return m;
}

}  // namespace

AttnParams AttnParams::bounded(Matrix key, Matrix query, double norm_budget) {
  if (!key.same_shape(query)) {
    throw std::invalid_argument("AttnParams: key " + key.shape_string() + " vs query " +
                                query.shape_string());
  }
  if (norm_budget < 0.0) throw std::invalid_argument("AttnParams: negative norm budget");
  return {rescale_to_budget(std::move(key), norm_budget),
          rescale_to_budget(std::move(query), norm_budget)};
}

AttnParams AttnParams::xavier(std::size_t d, std::size_t d_q, Rng& rng) {
  Matrix key = xavier_init(d, d_q, rng);
  Matrix query = xavier_init(d, d_q, rng);
  return {std::move(key), std::move(query)};
}

AttnParams AttnParams::random_bounded(std::size_t d, std::size_t d_q, double norm_budget,
                                      Rng& rng) {
  AttnParams p = xavier(d, d_q, rng);
  p.key = rescale_exactly(std::move(p.key), norm_budget);
  p.query = rescale_exactly(std::move(p.query), norm_budget);
  return p;
}

TheoryStack TheoryStack::random(std::size_t num_layers, std::size_t n, std::size_t d,
                                std::size_t d_q, double norm_budget, Rng& rng) {
  TheoryStack stack;
  stack.n = n;
  stack.d = d;
  stack.d_q = d_q;
  stack.norm_budget = norm_budget;
  stack.layers.reserve(num_layers);
  for (std::size_t i = 0; i < num_layers; ++i) {
    stack.layers.push_back(AttnParams::random_bounded(d, d_q, norm_budget, rng));
  }
  return stack;
}

void TheoryStack::validate() const {
  if (layers.empty()) throw std::invalid_argument("TheoryStack: no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& p = layers[i];
    if (p.key.rows() != d || p.key.cols() != d_q || !p.key.same_shape(p.query)) {
      throw std::invalid_argument("TheoryStack: layer " + std::to_string(i + 1) +
                                  " has shape " + p.key.shape_string() + ", expected " +
                                  std::to_string(d) + "x" + std::to_string(d_q));
    }
    const double bound = norm_budget * (1.0 + kBudgetSlack) + 1e-300;
    if (spectral_norm(p.key).value > bound || spectral_norm(p.query).value > bound) {
      throw std::invalid_argument("TheoryStack: layer " + std::to_string(i + 1) +
                                  " exceeds the norm budget");
    }
  }
}

Matrix attention_matrix(const Matrix& x, const AttnParams& params) {
  if (x.cols() != params.key.rows()) {
    throw std::invalid_argument("attention_matrix: X is " + x.shape_string() +
                                " but projections are " + params.key.shape_string());
  }
  const double norm = frobenius_norm(x);
  if (norm == 0.0) throw std::invalid_argument("attention_matrix: X = 0 is excluded");
  Matrix xq = matmul(x, params.query);
  Matrix xk = matmul(x, params.key);
  Matrix scores = matmul_nt(xq, xk);
  scores *= 1.0 / (std::sqrt(static_cast<double>(params.key.cols())) * norm * norm);
  return softmax_rows(scores);
}

Matrix phi_layer(const Matrix& x, const AttnParams& params) {
  Matrix out = matmul(attention_matrix(x, params), x);
  out += x;
  return out;
}

}  // namespace layerlock::theory
