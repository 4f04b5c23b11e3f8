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

#ifndef LAYERLOCK_AUTODIFF_ADAM_HPP_
#define LAYERLOCK_AUTODIFF_ADAM_HPP_

#include <cstddef>
#include <vector>

#include "layerlock/numcore/matrix.hpp"

namespace layerlock::autodiff {

enum class Schedule {
  kConstant,
  kCosine,  // peak lr decays to min_lr_fraction * lr over total_steps
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.1;
  Schedule schedule = Schedule::kCosine;
  std::size_t total_steps = 1;
  double min_lr_fraction = 0.1;
};

// Adam with decoupled weight decay. One moment pair per parameter; the step
// counter is shared.
class AdamState {
 public:
  // `decay` marks parameters that receive weight decay (norm gains do not).
  AdamState(const AdamConfig& config, const std::vector<Matrix>& params,
            std::vector<bool> decay = {});

  // Updates every parameter whose frozen flag is false. Frozen parameters and
  // their moments are left untouched, bit for bit. An empty mask freezes
  // nothing.
  void step(std::vector<Matrix>& params, const std::vector<const Matrix*>& grads,
            const std::vector<bool>& frozen = {});

  double lr_at(std::size_t step) const;
  std::size_t steps() const { return step_; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  std::vector<bool> decay_;
  std::size_t step_ = 0;
};

}  // namespace layerlock::autodiff

#endif  // LAYERLOCK_AUTODIFF_ADAM_HPP_
