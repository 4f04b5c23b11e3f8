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

#include "gradcheck.hpp"

#include <functional>

#include "layerlock/autodiff/tape.hpp"
#include "layerlock/numcore/sampling.hpp"
#include "oracles.hpp"

namespace oracle {

using layerlock::Matrix;
using layerlock::Rng;
using layerlock::autodiff::Tape;
using layerlock::autodiff::Var;
namespace ad = layerlock::autodiff;

namespace {

constexpr double kStep = 1e-6;

using Builder = std::function<Var(Tape&, const std::vector<Var>&)>;

// Loss = builder output, which must be 1x1. Returns the worst relative error
// over inputs.
double check(const std::vector<Matrix>& inputs, const Builder& build) {
  Tape tape;
  std::vector<Var> leaves;
  for (const Matrix& m : inputs) leaves.push_back(tape.leaf(m));
  const Var loss = build(tape, leaves);
  tape.backward(loss);
  double worst = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    auto f = [&](const Matrix& probe) {
      Tape t;
      std::vector<Var> ls;
      for (std::size_t j = 0; j < inputs.size(); ++j) ls.push_back(t.leaf(j == i ? probe : inputs[j]));
      return build(t, ls).value()(0, 0);
    };
    const Matrix fd = fd_gradient(f, inputs[i], kStep);
    worst = std::max(worst, rel_err(leaves[i].grad(), fd, 1e-10));
  }
  return worst;
}

// Reduces any output to a scalar with a non-trivial gradient.
Var reduce(Var out, const Matrix& target) { return ad::mse(out, target); }

}  // namespace

std::vector<GradCase> primitive_gradient_errors(std::uint64_t seed) {
  Rng rng(seed);
  auto rnd = [&](std::size_t r, std::size_t c) { return layerlock::normal_sample(r, c, rng); };
  std::vector<GradCase> out;

  for (int ta = 0; ta < 2; ++ta) {
    for (int tb = 0; tb < 2; ++tb) {
      const Matrix a = ta ? rnd(4, 3) : rnd(3, 4);
      const Matrix b = tb ? rnd(5, 4) : rnd(4, 5);
      const Matrix t = rnd(3, 5);
      out.push_back({"matmul(ta=" + std::to_string(ta) + ",tb=" + std::to_string(tb) + ")",
                     check({a, b}, [&](Tape&, const std::vector<Var>& v) {
                       return reduce(ad::matmul(v[0], v[1], ta, tb), t);
                     })});
    }
  }
  {
    // Two groups of per-sequence products, as attention uses them.
    const Matrix q = rnd(6, 4), k = rnd(6, 4), t = rnd(6, 3);
    out.push_back({"matmul(groups=2,nt)", check({q, k}, [&](Tape&, const std::vector<Var>& v) {
                     return reduce(ad::matmul(v[0], v[1], false, true, 2), t);
                   })});
    const Matrix p = rnd(6, 3), x = rnd(6, 5), t2 = rnd(6, 5);
    out.push_back({"matmul(groups=2,nn)", check({p, x}, [&](Tape&, const std::vector<Var>& v) {
                     return reduce(ad::matmul(v[0], v[1], false, false, 2), t2);
                   })});
  }
  {
    const Matrix a = rnd(3, 4), b = rnd(3, 4), t = rnd(3, 4);
    out.push_back({"add", check({a, b}, [&](Tape&, const std::vector<Var>& v) {
                     return reduce(ad::add(v[0], v[1]), t);
                   })});
    out.push_back({"scale", check({a}, [&](Tape&, const std::vector<Var>& v) {
                     return reduce(ad::scale(v[0], -1.7), t);
                   })});
    out.push_back({"row_softmax", check({a}, [&](Tape&, const std::vector<Var>& v) {
                     return reduce(ad::row_softmax(v[0]), t);
                   })});
    out.push_back({"rms_norm", check({a, rnd(1, 4)}, [&](Tape&, const std::vector<Var>& v) {
                     return reduce(ad::rms_norm(v[0], v[1]), t);
                   })});
    Matrix away = a;  // keep entries away from the kink
    for (double& x : away.data()) x += x >= 0 ? 0.1 : -0.1;
    out.push_back({"relu", check({away}, [&](Tape&, const std::vector<Var>& v) {
                     return reduce(ad::relu(v[0]), t);
                   })});
    out.push_back({"sum", check({a}, [&](Tape&, const std::vector<Var>& v) { return ad::sum(v[0]); })});
    out.push_back({"mse", check({a}, [&](Tape&, const std::vector<Var>& v) { return ad::mse(v[0], t); })});
  }
  {
    const Matrix table = rnd(5, 3), t = rnd(4, 3);
    const std::vector<std::int64_t> ids{4, 0, 4, 2};
    out.push_back({"embedding_gather", check({table}, [&](Tape&, const std::vector<Var>& v) {
                     return reduce(ad::embedding_gather(v[0], ids), t);
                   })});
  }
  {
    // Masked scores feed a softmax, as in attention.
    const Matrix s = rnd(6, 3), t = rnd(6, 3);
    out.push_back({"causal_mask", check({s}, [&](Tape&, const std::vector<Var>& v) {
                     return reduce(ad::row_softmax(ad::causal_mask(v[0])), t);
                   })});
  }
  {
    const Matrix z = rnd(5, 4);
    const std::vector<std::int64_t> tgt{1, -1, 3, 0, -1};
    out.push_back({"cross_entropy", check({z}, [&](Tape&, const std::vector<Var>& v) {
                     return ad::cross_entropy(v[0], tgt);
                   })});
    Matrix p = oracle::softmax_rows(rnd(5, 4));
    out.push_back({"cross_entropy_soft", check({z}, [&](Tape&, const std::vector<Var>& v) {
                     return ad::cross_entropy_soft(v[0], p);
                   })});
  }
  return out;
}

std::vector<GradCase> decoder_gradient_errors(std::uint64_t seed,
                                              const layerlock::toymodel::DecoderConfig& config,
                                              std::size_t batch, std::size_t entries_per_tensor) {
  namespace tm = layerlock::toymodel;
  Rng rng(seed);
  tm::DecoderParams params = tm::DecoderParams::xavier(config, rng);
  // Non-unit gains so their gradients are exercised away from the init.
  for (std::size_t i = 0; i < params.tensors.size(); ++i) {
    if (params.is_gain(i)) {
      for (double& g : params.tensors[i].data()) g = 1.0 + 0.2 * rng.normal();
    }
  }
  tm::TokenBatch tb{batch, config.seq_len, {}};
  std::vector<std::int64_t> targets;
  for (std::size_t i = 0; i < batch * config.seq_len; ++i) {
    tb.tokens.push_back(static_cast<std::int64_t>(rng.below(config.vocab)));
    targets.push_back(i % 5 == 0 ? -1 : static_cast<std::int64_t>(rng.below(config.vocab)));
  }
  auto loss_of = [&](const tm::DecoderParams& p) {
    Tape t;
    const auto fwd = tm::forward(t, p, tb);
    return ad::cross_entropy(*fwd.logits, targets).value()(0, 0);
  };

  Tape tape;
  const auto fwd = tm::forward(tape, params, tb);
  tape.backward(ad::cross_entropy(*fwd.logits, targets));

  std::vector<GradCase> out;
  tm::DecoderParams probe = params;
  for (std::size_t i = 0; i < params.tensors.size(); ++i) {
    const Matrix& g = fwd.params[i].grad();
    const std::size_t n = params.tensors[i].size();
    const std::size_t picks = std::min(n, entries_per_tensor);
    Matrix analytic(picks, 1), numeric(picks, 1);
    for (std::size_t k = 0; k < picks; ++k) {
      const std::size_t idx = picks == n ? k : static_cast<std::size_t>(rng.below(n));
      double& slot = probe.tensors[i].data()[idx];
      const double orig = slot;
      slot = orig + kStep;
      const double up = loss_of(probe);
      slot = orig - kStep;
      const double down = loss_of(probe);
      slot = orig;
      analytic(k, 0) = g.data()[idx];
      numeric(k, 0) = (up - down) / (2.0 * kStep);
    }
    out.push_back({params.name(i), rel_err(analytic, numeric, 1e-8)});
  }
  return out;
}

}  // namespace oracle
