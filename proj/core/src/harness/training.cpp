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

#include "layerlock/harness/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "layerlock/harness/streams.hpp"

namespace layerlock::harness {
namespace {

using autodiff::Tape;
using autodiff::Var;

std::vector<std::size_t> shuffled(std::size_t n, Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    std::swap(order[i - 1], order[static_cast<std::size_t>(rng.below(i))]);
  }
  return order;
}

toymodel::TokenBatch gather_batch(const std::vector<std::int64_t>& inputs, std::size_t seq,
                                  const std::vector<std::size_t>& order, std::size_t first,
                                  std::size_t n) {
  toymodel::TokenBatch b;
  b.batch = n;
  b.seq = seq;
  b.tokens.reserve(n * seq);
  for (std::size_t i = first; i < first + n; ++i) {
    const auto it = inputs.begin() + static_cast<std::ptrdiff_t>(order[i] * seq);
    b.tokens.insert(b.tokens.end(), it, it + static_cast<std::ptrdiff_t>(seq));
  }
  return b;
}

Matrix gather_rows(const Matrix& src, std::size_t seq, const std::vector<std::size_t>& order,
                   std::size_t first, std::size_t n) {
  Matrix out(n * seq, src.cols());
  for (std::size_t i = 0; i < n; ++i) {
    const auto begin = src.data().begin() + static_cast<std::ptrdiff_t>(order[first + i] * seq * src.cols());
    std::copy(begin, begin + static_cast<std::ptrdiff_t>(seq * src.cols()),
              out.data().begin() + static_cast<std::ptrdiff_t>(i * seq * src.cols()));
  }
  return out;
}

Matrix softmax_rows_of(const Matrix& z) {
  Matrix q(z.rows(), z.cols());
  for (std::size_t i = 0; i < z.rows(); ++i) {
    const auto zr = z.row(i);
    auto qr = q.row(i);
    const double mx = *std::max_element(zr.begin(), zr.end());
    double total = 0.0;
    for (std::size_t j = 0; j < zr.size(); ++j) total += (qr[j] = std::exp(zr[j] - mx));
    for (double& v : qr) v /= total;
  }
  return q;
}

std::vector<std::int64_t> argmax_rows(const Matrix& z) {
  std::vector<std::int64_t> out(z.rows());
  for (std::size_t i = 0; i < z.rows(); ++i) {
    const auto zr = z.row(i);
    out[i] = std::max_element(zr.begin(), zr.end()) - zr.begin();
  }
  return out;
}

void apply_step(DecoderParams& params, autodiff::AdamState& adam,
                const std::vector<Var>& leaves, const std::vector<bool>& frozen) {
  std::vector<const Matrix*> grads;
  grads.reserve(leaves.size());
  for (const Var& v : leaves) grads.push_back(&v.grad());
  adam.step(params.tensors, grads, frozen);
}

std::size_t steps_for(std::size_t count, const FitConfig& c) {
  return c.epochs * ((count + c.batch - 1) / c.batch);
}

void check_fit(std::size_t count, const FitConfig& c, const std::vector<bool>& frozen,
               const DecoderParams& params) {
  if (count == 0) throw std::invalid_argument("fit: empty training set");
  if (c.batch == 0) throw std::invalid_argument("fit: batch must be >= 1");
  if (!frozen.empty() && frozen.size() != params.count()) {
    throw std::invalid_argument("fit: frozen mask size mismatch");
  }
}

}  // namespace

taskgen::Dataset Suite::combined_eval() const {
  taskgen::Dataset all;
  for (const Benchmark& b : benchmarks) all.append(b.eval);
  return all;
}

Suite make_suite(const std::vector<taskgen::TaskSpec>& specs, std::uint64_t eval_seed,
                 std::size_t eval_count) {
  Suite s;
  s.specs = specs;
  for (const taskgen::TaskSpec& spec : specs) {
    Benchmark b{spec.name(), spec, taskgen::split_eval(spec, eval_seed, eval_count)};
    for (std::size_t i = 0; i < b.eval.count(); ++i) s.eval_hashes.insert(b.eval.example_hash(i));
    s.benchmarks.push_back(std::move(b));
  }
  return s;
}

std::vector<taskgen::TaskSpec> default_specs(std::size_t vocab, std::size_t seq_len,
                                             std::size_t modulus, std::uint64_t markov_seed,
                                             double markov_peak) {
  std::vector<taskgen::TaskSpec> specs;
  for (taskgen::TaskKind k : {taskgen::TaskKind::kModularAdd, taskgen::TaskKind::kCopyReverse,
                              taskgen::TaskKind::kMarkov}) {
    taskgen::TaskSpec s;
    s.kind = k;
    s.vocab = vocab;
    s.seq_len = seq_len;
    s.modulus = modulus;
    s.transition_seed = markov_seed;
    s.markov_peak = markov_peak;
    s.validate();
    specs.push_back(s);
  }
  return specs;
}

EvalResult evaluate(const DecoderParams& params, const taskgen::Dataset& data, std::size_t chunk) {
  if (data.count() == 0) throw std::invalid_argument("evaluate: empty dataset");
  if (chunk == 0) chunk = data.count();
  double loss = 0.0;
  std::size_t hits = 0, labelled = 0;
  for (std::size_t first = 0; first < data.count(); first += chunk) {
    const std::size_t n = std::min(chunk, data.count() - first);
    const Matrix z = toymodel::logits(params, data.batch(first, n));
    const auto targets = data.target_slice(first, n);
    for (std::size_t r = 0; r < z.rows(); ++r) {
      const std::int64_t t = targets[r];
      if (t < 0) continue;
      const auto zr = z.row(r);
      const auto best = std::max_element(zr.begin(), zr.end());
      const double mx = *best;
      double total = 0.0;
      for (double v : zr) total += std::exp(v - mx);
      loss += mx + std::log(total) - zr[static_cast<std::size_t>(t)];
      hits += (best - zr.begin()) == t ? 1 : 0;
      ++labelled;
    }
  }
  if (labelled == 0) throw std::invalid_argument("evaluate: no labelled positions");
  return {static_cast<double>(hits) / static_cast<double>(labelled),
          loss / static_cast<double>(labelled), labelled};
}

std::vector<bool> decay_mask(const DecoderParams& params) {
  std::vector<bool> m(params.count());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = !params.is_gain(i);
  return m;
}

double fit_outputs(DecoderParams& params, const taskgen::Dataset& data, LossKind loss,
                   const FitConfig& config, const std::vector<bool>& frozen, Rng& shuffle) {
  check_fit(data.count(), config, frozen, params);
  if (loss != LossKind::kHardTargets && !data.soft_labels) {
    throw std::invalid_argument("fit: soft-label training needs a queried dataset");
  }
  autodiff::AdamConfig adam_cfg = config.adam;
  adam_cfg.total_steps = steps_for(data.count(), config);
  autodiff::AdamState adam(adam_cfg, params.tensors, decay_mask(params));

  const std::size_t s = data.seq_len;
  double epoch_loss = 0.0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto order = shuffled(data.count(), shuffle);
    epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t first = 0; first < data.count(); first += config.batch) {
      const std::size_t n = std::min(config.batch, data.count() - first);
      Tape tape;
      const auto fwd = toymodel::forward(tape, params, gather_batch(data.inputs, s, order, first, n));
      Var l;
      if (loss == LossKind::kHardTargets) {
        std::vector<std::int64_t> t;
        t.reserve(n * s);
        for (std::size_t i = first; i < first + n; ++i) {
          const auto it = data.targets.begin() + static_cast<std::ptrdiff_t>(order[i] * s);
          t.insert(t.end(), it, it + static_cast<std::ptrdiff_t>(s));
        }
        l = autodiff::cross_entropy(*fwd.logits, t);
      } else {
        const Matrix z = gather_rows(*data.soft_labels, s, order, first, n);
        l = loss == LossKind::kSoftLabels ? autodiff::cross_entropy_soft(*fwd.logits, softmax_rows_of(z))
                                          : autodiff::cross_entropy(*fwd.logits, argmax_rows(z));
      }
      tape.backward(l);
      apply_step(params, adam, fwd.params, frozen);
      epoch_loss += l.value()(0, 0);
      ++batches;
    }
    epoch_loss /= static_cast<double>(batches);
  }
  return epoch_loss;
}

RepresentationSet representation_view(const taskgen::Dataset& queried) {
  if (!queried.representations || !queried.tap_layer) {
    throw std::invalid_argument("representation_view: dataset has no representation tap");
  }
  return {queried.seq_len, queried.inputs, *queried.representations, *queried.tap_layer};
}

double fit_representations(DecoderParams& params, const RepresentationSet& data,
                           const FitConfig& config, const std::vector<bool>& frozen,
                           Rng& shuffle) {
  const std::size_t s = data.seq_len;
  const std::size_t count = s == 0 ? 0 : data.inputs.size() / s;
  check_fit(count, config, frozen, params);
  if (data.representations.rows() != count * s ||
      data.representations.cols() != params.config.d_model) {
    throw std::invalid_argument("fit_representations: representations are " +
                                data.representations.shape_string());
  }
  autodiff::AdamConfig adam_cfg = config.adam;
  adam_cfg.total_steps = steps_for(count, config);
  autodiff::AdamState adam(adam_cfg, params.tensors, decay_mask(params));
  toymodel::ForwardOptions opt;
  opt.stop_after_layer = data.tap_layer;

  double epoch_loss = 0.0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto order = shuffled(count, shuffle);
    epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t first = 0; first < count; first += config.batch) {
      const std::size_t n = std::min(config.batch, count - first);
      Tape tape;
      const auto fwd = toymodel::forward(tape, params, gather_batch(data.inputs, s, order, first, n), opt);
      Var l = autodiff::mse(fwd.hidden.back(), gather_rows(data.representations, s, order, first, n));
      tape.backward(l);
      apply_step(params, adam, fwd.params, frozen);
      epoch_loss += l.value()(0, 0);
      ++batches;
    }
    epoch_loss /= static_cast<double>(batches);
  }
  return epoch_loss;
}

DecoderParams train_victim(const DecoderConfig& config, const std::vector<taskgen::TaskSpec>& specs,
                           const taskgen::HashSet& exclude, const VictimConfig& vc,
                           TrainLog* log,
                           const std::function<void(std::size_t, double)>& progress) {
  if (vc.batch == 0) throw std::invalid_argument("train_victim: batch must be >= 1");
  for (const auto& s : specs) {
    if (s.seq_len != config.seq_len || s.vocab != config.vocab) {
      throw std::invalid_argument("train_victim: task " + s.name() +
                                  " does not match the model's vocab/seq_len");
    }
  }
  Rng init(vc.seed, static_cast<std::uint64_t>(Purpose::kVictimInit));
  DecoderParams params = DecoderParams::xavier(config, init);
  Rng data_rng(vc.seed, static_cast<std::uint64_t>(Purpose::kVictimData));
  autodiff::AdamConfig adam_cfg = vc.adam;
  adam_cfg.total_steps = vc.steps;
  autodiff::AdamState adam(adam_cfg, params.tensors, decay_mask(params));

  double running = 0.0;
  std::size_t since = 0;
  for (std::size_t step = 1; step <= vc.steps; ++step) {
    const taskgen::Dataset batch = taskgen::generate_mixture(specs, vc.batch, data_rng, exclude);
    Tape tape;
    const auto fwd = toymodel::forward(tape, params, batch.all());
    Var l = autodiff::cross_entropy(*fwd.logits, batch.targets);
    tape.backward(l);
    apply_step(params, adam, fwd.params, {});
    running += l.value()(0, 0);
    ++since;
    if (vc.log_every && (step % vc.log_every == 0 || step == vc.steps)) {
      const double mean = running / static_cast<double>(since);
      if (log) log->losses.emplace_back(step, mean);
      if (progress) progress(step, mean);
      running = 0.0;
      since = 0;
    }
  }
  return params;
}

}  // namespace layerlock::harness
