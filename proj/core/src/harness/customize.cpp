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

#include "layerlock/harness/customize.hpp"

#include <stdexcept>

#include "layerlock/harness/streams.hpp"

namespace layerlock::harness {
namespace {

bool same_task(const taskgen::TaskSpec& a, const taskgen::TaskSpec& b) {
  if (a.kind != b.kind || a.vocab != b.vocab || a.seq_len != b.seq_len) return false;
  switch (a.kind) {
    case taskgen::TaskKind::kModularAdd: return a.modulus == b.modulus;
    case taskgen::TaskKind::kCopyReverse: return true;
    case taskgen::TaskKind::kMarkov:
      return a.transition_seed == b.transition_seed && a.markov_peak == b.markov_peak;
  }
  return true;
}

}  // namespace

taskgen::TaskSpec downstream_spec(std::size_t vocab, std::size_t seq_len,
                                  std::uint64_t transition_seed) {
  taskgen::TaskSpec s;
  s.kind = taskgen::TaskKind::kMarkov;
  s.vocab = vocab;
  s.seq_len = seq_len;
  s.transition_seed = transition_seed;
  return s;
}

nlohmann::json CustomizeResult::to_json() const {
  return {{"secured", secured},         {"frozen_accuracy", frozen_accuracy},
          {"accuracy", accuracy},       {"loss", loss},
          {"trained", trained},         {"trainable_scalars", trainable_scalars}};
}

CustomizeResult customize(const DecoderParams& model, const toymodel::SecuredSet& secured,
                          const CustomizeConfig& config,
                          const std::vector<taskgen::TaskSpec>& pretraining) {
  config.task.validate();
  for (const auto& p : pretraining) {
    if (same_task(p, config.task)) {
      throw std::invalid_argument("customize: downstream task " + config.task.name() +
                                  " is part of the pretraining mixture");
    }
  }
  if (config.task.vocab != model.config.vocab || config.task.seq_len != model.config.seq_len) {
    throw std::invalid_argument("customize: task shape does not match the model");
  }
  if (config.train_count == 0 || config.eval_count == 0) {
    throw std::invalid_argument("customize: empty train or eval set");
  }

  Rng eval_rng = stream(config.seed, Purpose::kCustomEval);
  const taskgen::Dataset eval = taskgen::generate(config.task, config.eval_count, eval_rng);
  Rng train_rng = stream(config.seed, Purpose::kCustomData);
  const taskgen::Dataset train = taskgen::generate_excluding(
      config.task, config.train_count, train_rng, taskgen::input_hashes(eval));

  CustomizeResult r;
  r.secured = secured.describe();
  const EvalResult before = evaluate(model, eval);
  r.frozen_accuracy = before.accuracy;
  const toymodel::Partition part = toymodel::partition(model, secured);
  if (secured.is_full() || part.unsecured.empty()) {
    r.accuracy = before.accuracy;
    r.loss = before.loss;
    return r;
  }
  DecoderParams tuned = model;
  Rng shuffle = stream(config.seed, Purpose::kShuffle);
  fit_outputs(tuned, train, LossKind::kHardTargets, config.fit, part.freeze_secured(), shuffle);
  const EvalResult after = evaluate(tuned, eval);
  r.trained = true;
  r.trainable_scalars = part.unsecured_scalars;
  r.accuracy = after.accuracy;
  r.loss = after.loss;
  return r;
}

}  // namespace layerlock::harness
