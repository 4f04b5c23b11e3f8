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

#ifndef LAYERLOCK_HARNESS_TRAINING_HPP_
#define LAYERLOCK_HARNESS_TRAINING_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "layerlock/autodiff/adam.hpp"
#include "layerlock/numcore/rng.hpp"
#include "layerlock/taskgen/tasks.hpp"
#include "layerlock/toymodel/decoder.hpp"

namespace layerlock::harness {

using toymodel::DecoderConfig;
using toymodel::DecoderParams;

// A held-out per-task evaluation set; the unit over which R is computed.
struct Benchmark {
  std::string name;
  taskgen::TaskSpec spec;
  taskgen::Dataset eval;
};

struct Suite {
  std::vector<taskgen::TaskSpec> specs;
  std::vector<Benchmark> benchmarks;
  taskgen::HashSet eval_hashes;

  // All benchmark sets concatenated in declaration order.
  taskgen::Dataset combined_eval() const;
};

Suite make_suite(const std::vector<taskgen::TaskSpec>& specs, std::uint64_t eval_seed,
                 std::size_t eval_count = taskgen::kDefaultEvalCount);

// The three pretraining tasks sharing vocab and sequence length.
std::vector<taskgen::TaskSpec> default_specs(std::size_t vocab, std::size_t seq_len,
                                             std::size_t modulus = 10,
                                             std::uint64_t markov_seed = 11,
                                             double markov_peak = 0.95);

struct EvalResult {
  double accuracy = 0.0;  // argmax hits over labelled positions
  double loss = 0.0;      // mean cross-entropy over labelled positions
  std::size_t labelled = 0;
};

EvalResult evaluate(const DecoderParams& params, const taskgen::Dataset& data,
                    std::size_t chunk = 256);

// Weight decay applies to every tensor except norm gains.
std::vector<bool> decay_mask(const DecoderParams& params);

enum class LossKind {
  kHardTargets,    // cross-entropy on the dataset's labels
  kSoftLabels,     // cross-entropy against softmax of the recorded logits
  kArgmaxLabels,   // cross-entropy against argmax of the recorded logits
};

struct FitConfig {
  std::size_t epochs = 5;
  std::size_t batch = 64;
  autodiff::AdamConfig adam;
};

// Minibatch training on `data` (shuffled per epoch by `shuffle`), updating
// only tensors whose frozen flag is false. Returns the mean loss of the last
// epoch.
double fit_outputs(DecoderParams& params, const taskgen::Dataset& data, LossKind loss,
                   const FitConfig& config, const std::vector<bool>& frozen, Rng& shuffle);

// Inputs and recorded hidden states only; no access to model outputs.
struct RepresentationSet {
  std::size_t seq_len = 0;
  std::vector<std::int64_t> inputs;
  Matrix representations;  // (count*seq) x d
  std::size_t tap_layer = 0;
};

RepresentationSet representation_view(const taskgen::Dataset& queried);

// MSE between the hidden state at the tap and the recorded representations.
double fit_representations(DecoderParams& params, const RepresentationSet& data,
                           const FitConfig& config, const std::vector<bool>& frozen,
                           Rng& shuffle);

struct VictimConfig {
  std::uint64_t seed = 1;
  std::size_t steps = 3000;
  std::size_t batch = 64;
  autodiff::AdamConfig adam{.lr = 3e-3};
  std::size_t log_every = 100;
};

struct TrainLog {
  std::vector<std::pair<std::size_t, double>> losses;  // (step, mean loss since last log)
};

// Trains on fresh mixture batches drawn from Rng(seed, victim-data), never
// using an input whose hash is in `exclude`.
DecoderParams train_victim(const DecoderConfig& config, const std::vector<taskgen::TaskSpec>& specs,
                           const taskgen::HashSet& exclude, const VictimConfig& vc,
                           TrainLog* log = nullptr,
                           const std::function<void(std::size_t, double)>& progress = nullptr);

}  // namespace layerlock::harness

#endif  // LAYERLOCK_HARNESS_TRAINING_HPP_
