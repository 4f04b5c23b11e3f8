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

#ifndef LAYERLOCK_TASKGEN_TASKS_HPP_
#define LAYERLOCK_TASKGEN_TASKS_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_set>
#include <vector>

#include "layerlock/numcore/matrix.hpp"
#include "layerlock/numcore/rng.hpp"
#include "layerlock/toymodel/decoder.hpp"

namespace layerlock::taskgen {

enum class TaskKind { kModularAdd, kCopyReverse, kMarkov };

const char* task_name(TaskKind kind);
std::optional<TaskKind> parse_task(const std::string& name);

// Vocabulary layout for V tokens: data tokens 0..V-5, then SEP and one
// marker per task.
struct Vocab {
  std::size_t size = 16;
  std::size_t data_tokens() const { return size - 4; }
  std::int64_t sep() const { return static_cast<std::int64_t>(size) - 4; }
  std::int64_t marker(TaskKind kind) const;
};

struct TaskSpec {
  TaskKind kind = TaskKind::kModularAdd;
  std::size_t vocab = 16;
  std::size_t seq_len = 32;
  std::size_t modulus = 10;         // modular-add
  std::uint64_t transition_seed = 0;  // markov
  double markov_peak = 0.95;        // probability of the preferred successor

  void validate() const;
  std::string name() const { return task_name(kind); }
};

// Row-stochastic (data_tokens x data_tokens) transition matrix of a markov spec.
Matrix markov_transitions(const TaskSpec& spec);

// Flat row-major (count x seq) token ids and per-position labels; -1 marks
// positions without a label.
struct Dataset {
  std::size_t seq_len = 0;
  std::vector<std::int64_t> inputs;
  std::vector<std::int64_t> targets;
  std::vector<TaskKind> kinds;  // per example
  // Present only after a query pass: (count*seq) x V noisy victim logits and
  // (count*seq) x d representations at the tap.
  std::optional<Matrix> soft_labels;
  std::optional<Matrix> representations;
  std::optional<std::size_t> tap_layer;

  std::size_t count() const { return seq_len == 0 ? 0 : inputs.size() / seq_len; }
  toymodel::TokenBatch batch(std::size_t first, std::size_t n) const;
  toymodel::TokenBatch all() const { return batch(0, count()); }
  std::vector<std::int64_t> target_slice(std::size_t first, std::size_t n) const;
  std::uint64_t example_hash(std::size_t i) const;
  void append(const Dataset& other);
};

using HashSet = std::unordered_set<std::uint64_t>;

Dataset generate(const TaskSpec& spec, std::size_t count, Rng& rng);
// Like generate, but resamples any example whose input hash is in `exclude`.
Dataset generate_excluding(const TaskSpec& spec, std::size_t count, Rng& rng,
                           const HashSet& exclude);
// Round-robin over specs (example i uses specs[i % size]).
Dataset generate_mixture(const std::vector<TaskSpec>& specs, std::size_t count, Rng& rng,
                         const HashSet& exclude = {});

HashSet input_hashes(const Dataset& d);

inline constexpr std::size_t kDefaultEvalCount = 1500;

// Held-out evaluation set from the dedicated stream (seed, eval purpose).
Dataset split_eval(const TaskSpec& spec, std::uint64_t seed,
                   std::size_t count = kDefaultEvalCount);

// Adds victim logits (+ Laplace(0, noise_scale) per entry, drawn row-major
// from `rng`) and, if `tap` is set, the victim's noiseless hidden states at
// that layer.
Dataset query_victim(const toymodel::DecoderParams& victim, const Dataset& inputs,
                     double noise_scale, std::optional<std::size_t> tap, Rng& rng,
                     std::size_t chunk = 256);

// One JSON object per line: input, target, kind and optional soft_label rows.
void write_jsonl(const Dataset& d, std::ostream& out);

}  // namespace layerlock::taskgen

#endif  // LAYERLOCK_TASKGEN_TASKS_HPP_
