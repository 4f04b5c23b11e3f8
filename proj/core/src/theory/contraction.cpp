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

#include "layerlock/theory/contraction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "layerlock/numcore/linalg.hpp"
#include "layerlock/numcore/sampling.hpp"

namespace layerlock::theory {
namespace {

// Projects v onto the complement of 1_n and normalizes; returns false if
// nothing is left.
bool center_and_normalize(Matrix& v) {
  const double mean = sum(v) / static_cast<double>(v.rows());
  for (double& x : v.data()) x -= mean;
  const double norm = frobenius_norm(v);
  if (norm == 0.0) return false;
  v *= 1.0 / norm;
  return true;
}

Matrix random_complement_vector(std::size_t n, Rng& rng) {
  Matrix v(n, 1);
  do {
    for (double& x : v.data()) x = rng.uniform(-1.0, 1.0);
  } while (!center_and_normalize(v));
  return v;
}

Matrix rescale_to(Matrix m, double budget, bool exact) {
  const double norm = spectral_norm(m).value;
  if (norm > 0.0 && (exact || norm > budget)) m *= budget / norm;
  return m;
}

double gain_along(const Matrix& x, const AttnParams& p, const Matrix& v) {
  return frobenius_norm(matmul(attention_matrix(x, p), v));
}

struct AscentPoint {
  AttnParams params;
  Matrix x;
};

// Central finite differences of ||M(X; K, Q) v|| over every entry of K, Q, X.
std::vector<double> fd_gradient(AscentPoint& pt, const Matrix& v, double h) {
  std::vector<double> grad;
  grad.reserve(pt.params.key.size() + pt.params.query.size() + pt.x.size());
  for (Matrix* m : {&pt.params.key, &pt.params.query, &pt.x}) {
    for (double& entry : m->data()) {
      const double saved = entry;
      entry = saved + h;
      const double up = gain_along(pt.x, pt.params, v);
      entry = saved - h;
      const double down = gain_along(pt.x, pt.params, v);
      entry = saved;
      grad.push_back((up - down) / (2.0 * h));
    }
  }
  return grad;
}

AscentPoint step_along(const AscentPoint& pt, const std::vector<double>& grad, double scale,
                       double budget) {
  AscentPoint out = pt;
  std::size_t k = 0;
  for (Matrix* m : {&out.params.key, &out.params.query, &out.x}) {
    for (double& entry : m->data()) entry += scale * grad[k++];
  }
  out.params.key = rescale_to(std::move(out.params.key), budget, false);
  out.params.query = rescale_to(std::move(out.params.query), budget, false);
  const double xn = frobenius_norm(out.x);
  if (xn > 0.0) out.x *= 1.0 / xn;
  return out;
}

}  // namespace

double complement_gain(const Matrix& attention) {
  const std::size_t n = attention.rows();
  if (n < 2) return 0.0;
  Matrix centered = attention;
  for (std::size_t i = 0; i < n; ++i) {
    double row_total = 0.0;
    for (std::size_t j = 0; j < n; ++j) row_total += attention(i, j);
    const double shift = row_total / static_cast<double>(n);
    for (std::size_t j = 0; j < n; ++j) centered(i, j) -= shift;
  }
  return singular_values(centered).front();
}

BetaEstimate estimate_beta(std::size_t n, std::size_t d, std::size_t d_q, double norm_budget,
                           Rng& rng, const BetaOptions& options) {
  if (norm_budget < 0.0) throw std::invalid_argument("estimate_beta: negative norm budget");
  if (n == 0 || d == 0 || d_q == 0) throw std::invalid_argument("estimate_beta: empty shape");

  BetaEstimate best;
  best.params = {Matrix(d, d_q), Matrix(d, d_q)};
  best.x = Matrix(n, d, 1.0 / std::sqrt(static_cast<double>(n * d)));
  best.v = Matrix(n, 1);
  // With a zero budget every score vanishes, M is exactly uniform and
  // annihilates the complement; n == 1 has no complement at all.
  if (norm_budget == 0.0 || n < 2) return best;

  best.value = -1.0;
  for (std::size_t r = 0; r < options.restarts; ++r) {
    Rng local = rng.split(r);
    AscentPoint pt;
    pt.params.key = rescale_to(xavier_init(d, d_q, local), norm_budget, true);
    pt.params.query = rescale_to(xavier_init(d, d_q, local), norm_budget, true);
    pt.x = Matrix(n, d);
    for (double& x : pt.x.data()) x = local.uniform(-1.0, 1.0);
    pt.x *= 1.0 / frobenius_norm(pt.x);
    Matrix v = random_complement_vector(n, local);

    double step = 0.1;
    for (std::size_t it = 0; it < options.ascent_steps; ++it) {
      const Matrix m = attention_matrix(pt.x, pt.params);
      Matrix next_v = matmul_tn(m, matmul(m, v));
      if (center_and_normalize(next_v)) v = std::move(next_v);

      const double current = gain_along(pt.x, pt.params, v);
      const std::vector<double> grad = fd_gradient(pt, v, options.fd_step);
      double gnorm = 0.0;
      for (double g : grad) gnorm += g * g;
      gnorm = std::sqrt(gnorm);
      if (gnorm == 0.0 || step < 1e-9) continue;

      AscentPoint trial = step_along(pt, grad, step / gnorm, norm_budget);
      if (gain_along(trial.x, trial.params, v) > current) {
        pt = std::move(trial);
        step = std::min(step * 1.5, 1.0);
      } else {
        step *= 0.5;
      }
    }

    const Matrix m = attention_matrix(pt.x, pt.params);
    const double value = complement_gain(m);
    if (value > best.value) {
      best.value = value;
      best.params = pt.params;
      best.x = pt.x;
      best.v = v;
    }
  }
  // The estimator reports a contraction factor; anything at or above one is
  // clipped just below it.
  best.value = std::clamp(best.value, 0.0, std::nextafter(1.0, 0.0));
  return best;
}

double alpha_star(double beta) {
  if (!(beta >= 0.0 && beta < 1.0)) {
    throw std::invalid_argument("alpha_star: beta must lie in [0, 1), got " +
                                std::to_string(beta));
  }
  return std::log2(2.0 / (1.0 + beta));
}

AdversarialConstruction adversarial_construction(std::size_t n, std::size_t d, std::size_t d_q,
                                                 double norm_budget, Rng& rng) {
  if (n < 2) throw std::invalid_argument("adversarial_construction: needs n >= 2");
  if (!(norm_budget > 0.0)) {
    throw std::invalid_argument("adversarial_construction: norm budget must be positive");
  }
  if (d == 0 || d_q == 0) throw std::invalid_argument("adversarial_construction: empty shape");

  AdversarialConstruction adv;
  // The pair sits on the first two rows: both rows then see the same
  // softmax normalizer bit for bit, so the mirror symmetry survives rounding.
  adv.pair_first = 0;
  adv.pair_second = 1;
  const double a = 1.0 / std::sqrt(2.0);
  adv.v = Matrix(n, 1);
  adv.v(adv.pair_first, 0) = a;
  adv.v(adv.pair_second, 0) = -a;

  // With X = v 1_d^T the scores reduce to ((Q^T 1_d) . (K^T 1_d)) v v^T /
  // (sqrt(d_Q) d); K = Q = (D / sqrt(d)) 1_d u^T maximizes that scale.
  Matrix u(d_q, 1);
  do {
    for (double& x : u.data()) x = rng.normal();
  } while (frobenius_norm(u) == 0.0);
  u *= 1.0 / frobenius_norm(u);
  Matrix proj(d, d_q);
  const double scale = norm_budget / std::sqrt(static_cast<double>(d));
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t c = 0; c < d_q; ++c) proj(r, c) = scale * u(c, 0);
  }
  adv.params = {proj, proj};

  adv.x = Matrix(n, d);
  for (std::size_t p = 0; p < d; ++p) adv.x.set_column(p, adv.v);
  adv.gain = gain_along(adv.x, adv.params, adv.v);
  return adv;
}

TheoryStack adversarial_stack(const AdversarialConstruction& adv, std::size_t num_layers,
                              double norm_budget) {
  TheoryStack stack;
  stack.n = adv.x.rows();
  stack.d = adv.x.cols();
  stack.d_q = adv.params.key.cols();
  stack.norm_budget = norm_budget;
  stack.layers.assign(num_layers, adv.params);
  return stack;
}

DoublingProbe doubling_ratio_probe(const Matrix& x, const AttnParams& params) {
  const Matrix out = phi_layer(x, params);
  const std::size_t n = x.rows();
  DoublingProbe probe;
  probe.ratio.resize(x.cols(), std::numeric_limits<double>::quiet_NaN());
  probe.skipped.resize(x.cols(), false);
  for (std::size_t p = 0; p < x.cols(); ++p) {
    double in = 0.0, out_total = 0.0, norm2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      in += x(i, p);
      out_total += out(i, p);
      norm2 += x(i, p) * x(i, p);
    }
    const double floor = 1e-12 * std::sqrt(norm2 * static_cast<double>(n));
    if (std::fabs(in) <= floor) {
      probe.skipped[p] = true;
      continue;
    }
    probe.ratio[p] = std::fabs(out_total) / std::fabs(in);
  }
  return probe;
}

bool technical_inequality_holds(double x) {
  return std::sqrt(1.0 - 1.0 / std::sqrt(1.0 + x * x)) <= x;
}

bool technical_inequality_check(std::size_t samples, Rng& rng) {
  if (samples == 0) throw std::invalid_argument("technical_inequality_check: samples >= 1");
  if (!technical_inequality_holds(1e-12) || !technical_inequality_holds(1.0 - 1e-12)) {
    return false;
  }
  for (std::size_t i = 0; i < samples; ++i) {
    if (!technical_inequality_holds(rng.uniform_open())) return false;
  }
  return true;
}

}  // namespace layerlock::theory
