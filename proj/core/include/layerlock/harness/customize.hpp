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

#ifndef LAYERLOCK_HARNESS_CUSTOMIZE_HPP_
#define LAYERLOCK_HARNESS_CUSTOMIZE_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "layerlock/harness/training.hpp"
#include "layerlock/toymodel/secured_set.hpp"

namespace layerlock::harness {

// A markov task whose transition table differs from pretraining.
taskgen::TaskSpec downstream_spec(std::size_t vocab, std::size_t seq_len,
                                  std::uint64_t transition_seed = 97);

struct CustomizeConfig {
  taskgen::TaskSpec task = downstream_spec(16, 32);
  std::size_t train_count = 2048;
  std::size_t eval_count = 1000;
  FitConfig fit{.epochs = 3, .batch = 64, .adam = {.lr = 1e-3}};
  std::uint64_t seed = 7;
};

struct CustomizeResult {
  std::string secured;
  double frozen_accuracy = 0.0;  // before any fine-tuning
  double accuracy = 0.0;
  double loss = 0.0;
  bool trained = false;
  std::size_t trainable_scalars = 0;

  nlohmann::json to_json() const;
};

// The owner fine-tunes only the unsecured tensors on the downstream task; the
// secured ones keep the victim's values. A fully secured model is not trained
// and reports its frozen accuracy. Throws if the task equals a pretraining spec.
CustomizeResult customize(const DecoderParams& model, const toymodel::SecuredSet& secured,
                          const CustomizeConfig& config,
                          const std::vector<taskgen::TaskSpec>& pretraining = {});

}  // namespace layerlock::harness

#endif  // LAYERLOCK_HARNESS_CUSTOMIZE_HPP_
