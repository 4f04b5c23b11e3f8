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

#include "layerlock/taskgen/tasks.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "layerlock/numcore/hash.hpp"

namespace layerlock::taskgen {
namespace {

constexpr std::uint64_t kEvalStream = 0x6576616c00000000ULL;        // "eval"
constexpr std::uint64_t kTransitionStream = 0x6d6b7600ULL;          // "mkv"

std::vector<std::size_t> successor_map(const TaskSpec& spec) {
  const std::size_t n = Vocab{spec.vocab}.data_tokens();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(spec.transition_seed, kTransitionStream);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

std::int64_t draw_data(std::size_t n, Rng& rng) {
  return static_cast<std::int64_t>(rng.below(n));
}

// Fills one example of `spec` into in/tgt (each seq_len long).
void fill_example(const TaskSpec& spec, const std::vector<std::size_t>& succ, Rng& rng,
                  std::int64_t* in, std::int64_t* tgt) {
  const Vocab voc{spec.vocab};
  const std::size_t s = spec.seq_len;
  std::fill(tgt, tgt + s, -1);
  in[0] = voc.marker(spec.kind);
  switch (spec.kind) {
    case TaskKind::kModularAdd: {
      const auto m = static_cast<std::int64_t>(spec.modulus);
      for (std::size_t t = 1; t < s; ++t) in[t] = draw_data(spec.modulus, rng);
      for (std::size_t t = 2; t < s; ++t) tgt[t] = (in[t - 1] + in[t]) % m;
      return;
    }
    case TaskKind::kCopyReverse: {
      const std::size_t k = (s - 2) / 2;
      for (std::size_t t = 1; t <= k; ++t) in[t] = draw_data(voc.data_tokens(), rng);
      in[k + 1] = voc.sep();
      for (std::size_t i = 0; i < k; ++i) in[k + 2 + i] = in[k - i];
      // Next-token labels over the reversed half.
      for (std::size_t t = k + 1; t + 1 < 2 * k + 2; ++t) tgt[t] = in[t + 1];
      for (std::size_t t = 2 * k + 2; t < s; ++t) in[t] = voc.sep();  // odd lengths pad
      return;
    }
    case TaskKind::kMarkov: {
      const std::size_t n = voc.data_tokens();
      in[1] = draw_data(n, rng);
      for (std::size_t t = 2; t < s; ++t) {
        const auto prev = static_cast<std::size_t>(in[t - 1]);
        const std::size_t peak = succ[prev];
        if (rng.uniform() < spec.markov_peak) {
          in[t] = static_cast<std::int64_t>(peak);
        } else {
          std::size_t other = static_cast<std::size_t>(rng.below(n - 1));
          if (other >= peak) ++other;
          in[t] = static_cast<std::int64_t>(other);
        }
      }
      for (std::size_t t = 1; t + 1 < s; ++t) tgt[t] = in[t + 1];
      return;
    }
  }
}

}  // namespace

const char* task_name(TaskKind kind) {
  switch (kind) {
    case TaskKind::kModularAdd: return "modular-add";
    case TaskKind::kCopyReverse: return "copy-reverse";
    case TaskKind::kMarkov: return "markov";
  }
  return "unknown";
}

std::optional<TaskKind> parse_task(const std::string& name) {
  for (TaskKind k : {TaskKind::kModularAdd, TaskKind::kCopyReverse, TaskKind::kMarkov}) {
    if (name == task_name(k)) return k;
  }
  return std::nullopt;
}

std::int64_t Vocab::marker(TaskKind kind) const {
  return static_cast<std::int64_t>(size) - 3 + static_cast<std::int64_t>(kind);
}

void TaskSpec::validate() const {
  if (vocab < 6) throw std::invalid_argument("TaskSpec: vocab must be at least 6");
  const std::size_t data = Vocab{vocab}.data_tokens();
  switch (kind) {
    case TaskKind::kModularAdd:
      if (seq_len < 3) throw std::invalid_argument("TaskSpec: modular-add needs seq_len >= 3");
      if (modulus < 2 || modulus > data) {
        throw std::invalid_argument("TaskSpec: modulus " + std::to_string(modulus) +
                                    " outside 2.." + std::to_string(data));
      }
      break;
    case TaskKind::kCopyReverse:
      if (seq_len < 4) throw std::invalid_argument("TaskSpec: copy-reverse needs seq_len >= 4");
      break;
    case TaskKind::kMarkov:
      if (seq_len < 3) throw std::invalid_argument("TaskSpec: markov needs seq_len >= 3");
      if (!(markov_peak > 0.0 && markov_peak < 1.0)) {
        throw std::invalid_argument("TaskSpec: markov_peak must lie in (0, 1)");
      }
      break;
  }
}

Matrix markov_transitions(const TaskSpec& spec) {
  const std::size_t n = Vocab{spec.vocab}.data_tokens();
  const auto succ = successor_map(spec);
  Matrix p(n, n, (1.0 - spec.markov_peak) / static_cast<double>(n - 1));
  for (std::size_t i = 0; i < n; ++i) p(i, succ[i]) = spec.markov_peak;
  return p;
}

toymodel::TokenBatch Dataset::batch(std::size_t first, std::size_t n) const {
  if (first + n > count()) throw std::out_of_range("Dataset::batch: range past the end");
  toymodel::TokenBatch b;
  b.batch = n;
  b.seq = seq_len;
  b.tokens.assign(inputs.begin() + static_cast<std::ptrdiff_t>(first * seq_len),
                  inputs.begin() + static_cast<std::ptrdiff_t>((first + n) * seq_len));
  return b;
}

std::vector<std::int64_t> Dataset::target_slice(std::size_t first, std::size_t n) const {
  if (first + n > count()) throw std::out_of_range("Dataset::target_slice: range past the end");
  return {targets.begin() + static_cast<std::ptrdiff_t>(first * seq_len),
          targets.begin() + static_cast<std::ptrdiff_t>((first + n) * seq_len)};
}

std::uint64_t Dataset::example_hash(std::size_t i) const {
  std::uint64_t h = kFnvOffset;
  for (std::size_t t = 0; t < seq_len; ++t) {
    const auto v = static_cast<std::uint64_t>(inputs[i * seq_len + t]);
    unsigned char bytes[8];
    for (int b = 0; b < 8; ++b) bytes[b] = static_cast<unsigned char>(v >> (8 * b));
    h = fnv1a64(bytes, h);
  }
  return h;
}

void Dataset::append(const Dataset& other) {
  if (other.count() == 0) return;
  if (count() == 0) {
    *this = other;
    return;
  }
  if (other.seq_len != seq_len || soft_labels || other.soft_labels || representations ||
      other.representations) {
    throw std::invalid_argument("Dataset::append: only raw datasets of equal length concatenate");
  }
  inputs.insert(inputs.end(), other.inputs.begin(), other.inputs.end());
  targets.insert(targets.end(), other.targets.begin(), other.targets.end());
  kinds.insert(kinds.end(), other.kinds.begin(), other.kinds.end());
}

Dataset generate_mixture(const std::vector<TaskSpec>& specs, std::size_t count, Rng& rng,
                         const HashSet& exclude) {
  if (specs.empty()) throw std::invalid_argument("generate: no task specs");
  if (count == 0) throw std::invalid_argument("generate: count must be >= 1");
  const std::size_t s = specs.front().seq_len;
  std::vector<std::vector<std::size_t>> succ;
  for (const TaskSpec& spec : specs) {
    spec.validate();
    if (spec.seq_len != s || spec.vocab != specs.front().vocab) {
      throw std::invalid_argument("generate: mixed specs must share vocab and seq_len");
    }
    succ.push_back(spec.kind == TaskKind::kMarkov ? successor_map(spec)
                                                  : std::vector<std::size_t>{});
  }
  Dataset d;
  d.seq_len = s;
  d.inputs.resize(count * s);
  d.targets.resize(count * s);
  d.kinds.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t which = i % specs.size();
    d.kinds[i] = specs[which].kind;
    for (int attempt = 0;; ++attempt) {
      fill_example(specs[which], succ[which], rng, &d.inputs[i * s], &d.targets[i * s]);
      if (exclude.empty() || !exclude.contains(d.example_hash(i))) break;
      if (attempt > 10000) throw std::runtime_error("generate: exclusion set blocks sampling");
    }
  }
  return d;
}

Dataset generate(const TaskSpec& spec, std::size_t count, Rng& rng) {
  return generate_mixture({spec}, count, rng);
}

Dataset generate_excluding(const TaskSpec& spec, std::size_t count, Rng& rng,
                           const HashSet& exclude) {
  return generate_mixture({spec}, count, rng, exclude);
}

HashSet input_hashes(const Dataset& d) {
  HashSet out;
  out.reserve(d.count());
  for (std::size_t i = 0; i < d.count(); ++i) out.insert(d.example_hash(i));
  return out;
}

Dataset split_eval(const TaskSpec& spec, std::uint64_t seed, std::size_t count) {
  Rng rng(seed, kEvalStream + static_cast<std::uint64_t>(spec.kind));
  return generate(spec, count, rng);
}

Dataset query_victim(const toymodel::DecoderParams& victim, const Dataset& inputs,
                     double noise_scale, std::optional<std::size_t> tap, Rng& rng,
                     std::size_t chunk) {
  if (noise_scale < 0.0) throw std::invalid_argument("query_victim: negative noise scale");
  if (inputs.count() == 0) throw std::invalid_argument("query_victim: empty input set");
  if (chunk == 0) chunk = inputs.count();
  const std::size_t s = inputs.seq_len;
  const std::size_t rows = inputs.count() * s;
  Dataset out = inputs;
  out.soft_labels = Matrix(rows, victim.config.vocab);
  if (tap) {
    if (*tap > victim.config.layers) throw std::out_of_range("query_victim: tap beyond model");
    out.representations = Matrix(rows, victim.config.d_model);
    out.tap_layer = tap;
  }
  for (std::size_t first = 0; first < inputs.count(); first += chunk) {
    const std::size_t n = std::min(chunk, inputs.count() - first);
    autodiff::Tape tape;
    toymodel::ForwardOptions opt;
    opt.keep_hidden = tap.has_value();
    const auto fwd = toymodel::forward(tape, victim, inputs.batch(first, n), opt);
    const Matrix& z = fwd.logits->value();
    std::copy(z.data().begin(), z.data().end(),
              out.soft_labels->data().begin() + static_cast<std::ptrdiff_t>(first * s * z.cols()));
    if (tap) {
      const Matrix& h = fwd.hidden[*tap].value();
      std::copy(h.data().begin(), h.data().end(),
                out.representations->data().begin() +
                    static_cast<std::ptrdiff_t>(first * s * h.cols()));
    }
  }
  if (noise_scale > 0.0) {
    for (double& v : out.soft_labels->data()) v += rng.laplace(noise_scale);
  }
  return out;
}

void write_jsonl(const Dataset& d, std::ostream& out) {
  const std::size_t s = d.seq_len;
  for (std::size_t i = 0; i < d.count(); ++i) {
    nlohmann::json rec;
    rec["kind"] = task_name(d.kinds.at(i));
    rec["input"] = std::vector<std::int64_t>(d.inputs.begin() + static_cast<std::ptrdiff_t>(i * s),
                                             d.inputs.begin() + static_cast<std::ptrdiff_t>((i + 1) * s));
    rec["target"] = d.target_slice(i, 1);
    if (d.soft_labels) {
      nlohmann::json rows = nlohmann::json::array();
      for (std::size_t t = 0; t < s; ++t) {
        const auto r = d.soft_labels->row(i * s + t);
        rows.push_back(std::vector<double>(r.begin(), r.end()));
      }
      rec["soft_label"] = rows;
    }
    out << rec.dump() << '\n';
  }
}

}  // namespace layerlock::taskgen
