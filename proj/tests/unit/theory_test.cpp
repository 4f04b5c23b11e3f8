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

#include <cmath>

#include <gtest/gtest.h>

#include "layerlock/numcore/linalg.hpp"
#include "layerlock/numcore/sampling.hpp"
#include "layerlock/theory/attention_layer.hpp"
#include "layerlock/theory/collapse.hpp"
#include "layerlock/theory/contraction.hpp"
#include "oracles.hpp"

namespace {

using namespace layerlock;
using namespace layerlock::theory;

TEST(AttentionLayer, PhiMatchesHandEvaluation) {
  for (std::uint64_t seed : {1, 2, 3, 4}) {
    Rng rng(seed);
    const Matrix x = normal_sample(6, 5, rng);
    const AttnParams p = AttnParams::xavier(5, 3, rng);
    EXPECT_LT(oracle::rel_err(phi_layer(x, p), oracle::phi(x, p.key, p.query)), 1e-13);
  }
}

TEST(AttentionLayer, TwoByTwoByHand) {
  // X = I, K = Q = I (d_q = 2): scores X Q K^T X^T / (sqrt 2 * ||X||^2) = I / (2 sqrt 2).
  const Matrix x = Matrix::identity(2);
  const AttnParams p{Matrix::identity(2), Matrix::identity(2)};
  const double s = 1.0 / (2.0 * std::sqrt(2.0));
  const double hi = std::exp(s) / (std::exp(s) + 1.0);
  const Matrix out = phi_layer(x, p);
  EXPECT_NEAR(out(0, 0), 1.0 + hi, 1e-15);
  EXPECT_NEAR(out(0, 1), 1.0 - hi, 1e-15);
  EXPECT_NEAR(out(1, 1), 1.0 + hi, 1e-15);
}

TEST(AttentionLayer, SingleTokenDoubles) {
  Rng rng(9);
  const Matrix x = normal_sample(1, 7, rng);
  const AttnParams p = AttnParams::xavier(7, 3, rng);
  const Matrix out = phi_layer(x, p);
  for (std::size_t j = 0; j < 7; ++j) EXPECT_NEAR(out(0, j), 2.0 * x(0, j), 1e-12 * std::abs(x(0, j)));
}

TEST(AttentionLayer, DegreeOneHomogeneous) {
  Rng rng(10);
  const Matrix x = normal_sample(5, 4, rng);
  const AttnParams p = AttnParams::xavier(4, 2, rng);
  const Matrix base = phi_layer(x, p);
  for (double c : {1e-3, 3.7, 1e3}) {
    EXPECT_LT(oracle::rel_err(phi_layer(c * x, p), c * base), 1e-12);
  }
}

TEST(AttentionLayer, AttentionIsRowStochastic) {
  Rng rng(11);
  const Matrix x = normal_sample(6, 4, rng);
  const Matrix m = attention_matrix(x, AttnParams::xavier(4, 2, rng));
  for (std::size_t i = 0; i < 6; ++i) {
    double t = 0.0;
    for (double v : m.row(i)) {
      EXPECT_GE(v, 0.0);
      t += v;
    }
    EXPECT_NEAR(t, 1.0, 1e-15);
  }
  EXPECT_THROW(attention_matrix(Matrix(3, 4), AttnParams::xavier(4, 2, rng)), std::invalid_argument);
}

TEST(AttentionLayer, BoundedRespectsBudget) {
  Rng rng(12);
  const auto p = AttnParams::random_bounded(8, 4, 0.1, rng);
  EXPECT_NEAR(oracle::singular_values(p.key)[0], 0.1, 1e-9);
  EXPECT_NEAR(oracle::singular_values(p.query)[0], 0.1, 1e-9);
  const auto stack = TheoryStack::random(3, 4, 8, 4, 0.1, rng);
  EXPECT_NO_THROW(stack.validate());
}

TEST(Doubling, UniformAttentionRatioIsTwo) {
  Rng rng(13);
  const Matrix x = normal_sample(8, 6, rng);
  const AttnParams zero{Matrix(6, 3), Matrix(6, 3)};
  const auto probe = doubling_ratio_probe(x, zero);
  for (std::size_t p = 0; p < 6; ++p) {
    ASSERT_FALSE(probe.skipped[p]);
    EXPECT_NEAR(probe.ratio[p], 2.0, 1e-12);
  }
}

TEST(Doubling, SkipsColumnsOrthogonalToOnes) {
  Matrix x(4, 2);
  x(0, 0) = 1.0;
  x(1, 0) = -1.0;
  x(0, 1) = 1.0;
  const AttnParams zero{Matrix(2, 1), Matrix(2, 1)};
  const auto probe = doubling_ratio_probe(x, zero);
  EXPECT_TRUE(probe.skipped[0]);
  EXPECT_TRUE(std::isnan(probe.ratio[0]));
  EXPECT_FALSE(probe.skipped[1]);
}

TEST(Collapse, ColumnDeviationsOfOnesAreZero) {
  const Matrix ones = Matrix::ones(5, 3);
  for (double d : column_deviations(ones)) EXPECT_NEAR(d, 0.0, 1e-15);
  Matrix neg = ones * -2.0;
  for (double d : column_deviations(neg)) EXPECT_NEAR(d, 0.0, 1e-15);
  Matrix e(2, 1);
  e(0, 0) = 1.0;
  e(1, 0) = -1.0;
  EXPECT_NEAR(column_deviations(e)[0], std::sqrt(2.0), 1e-15);
}

TEST(Collapse, RandomBoundedStackCollapses) {
  Rng rng(14);
  const auto stack = TheoryStack::random(16, 8, 16, 4, 0.1, rng);
  const Matrix x0 = normal_sample(8, 16, rng);
  Rng rr(15);
  const SecuredLayer sec{1, AttnParams::xavier(16, 4, rr)};
  const auto rep = deep_normalized_output(x0, stack, sec);
  EXPECT_TRUE(rep.converged);
  EXPECT_TRUE(rep.collapsed());
  EXPECT_LT(rep.max_deviation(), 1e-6);
  EXPECT_NEAR(frobenius_norm(rep.output), 1.0, 1e-12);
}

TEST(Collapse, SecuredLayerIndex) {
  EXPECT_EQ(secured_layer_for_alpha(0.5, 32), 16u);
  EXPECT_EQ(secured_layer_for_alpha(0.51, 32), 17u);
  EXPECT_EQ(secured_layer_for_alpha(0.001, 32), 1u);
  EXPECT_EQ(secured_layer_for_alpha(1.0, 32), 32u);
}

TEST(Collapse, SweepOrderAndDeterminism) {
  Rng rng(16);
  const auto stack = TheoryStack::random(8, 6, 8, 2, 0.1, rng);
  const Matrix x0 = normal_sample(6, 8, rng);
  const auto a = transition_sweep(stack, x0, {0.25, 0.75}, {3, 1}, {}, nullptr, 1);
  const auto b = transition_sweep(stack, x0, {0.25, 0.75}, {3, 1}, {}, nullptr, 3);
  ASSERT_EQ(a.runs.size(), 4u);
  EXPECT_EQ(a.runs[0].alpha, 0.25);
  EXPECT_EQ(a.runs[0].seed, 3u);
  EXPECT_EQ(a.runs[1].seed, 1u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(a.runs[i].max_deviation, b.runs[i].max_deviation);
  EXPECT_EQ(a.summary[1].secured_layer, 6u);
}

TEST(Contraction, ComplementGainOfUniformIsZero) {
  Matrix u(5, 5, 0.2);
  EXPECT_NEAR(complement_gain(u), 0.0, 1e-12);
  EXPECT_NEAR(complement_gain(Matrix::identity(4)), 1.0, 1e-12);
}

TEST(Contraction, BetaEstimateBounds) {
  Rng rng(17);
  BetaOptions opt;
  opt.restarts = 2;
  opt.ascent_steps = 20;
  const auto b0 = estimate_beta(6, 8, 4, 0.0, rng, opt);
  EXPECT_EQ(b0.value, 0.0);
  const auto b1 = estimate_beta(6, 8, 4, 1.0, rng, opt);
  EXPECT_GT(b1.value, 0.0);
  EXPECT_LT(b1.value, 1.0);
  // The estimate is realized by the returned witness.
  EXPECT_NEAR(complement_gain(attention_matrix(b1.x, b1.params)), b1.value, 1e-12);
}

TEST(Contraction, AlphaStar) {
  EXPECT_DOUBLE_EQ(alpha_star(0.0), 1.0);
  EXPECT_NEAR(alpha_star(0.5), std::log2(4.0 / 3.0), 1e-15);
  EXPECT_THROW(alpha_star(1.0), std::invalid_argument);
  EXPECT_THROW(alpha_star(-0.1), std::invalid_argument);
}

TEST(Contraction, AdversaryResistsCollapse) {
  Rng rng(18);
  const auto adv = adversarial_construction(8, 16, 4, 2.0, rng);
  const auto stack = adversarial_stack(adv, 8, 2.0);
  EXPECT_NO_THROW(stack.validate());
  Rng rr(19);
  const SecuredLayer sec{8, AttnParams::xavier(16, 4, rr)};
  const auto rep = deep_normalized_output(adv.x, stack, sec);
  EXPECT_GE(rep.min_deviation(), 1.0);
  EXPECT_FALSE(rep.collapsed());
}

TEST(Contraction, TechnicalInequality) {
  EXPECT_NEAR(std::sqrt(1.0 - 1.0 / std::sqrt(1.25)), 0.32492, 1e-5);
  EXPECT_TRUE(technical_inequality_holds(0.5));
  EXPECT_TRUE(technical_inequality_holds(1e-12));
  Rng rng(20);
  EXPECT_TRUE(technical_inequality_check(1000, rng));
}

}  // namespace
