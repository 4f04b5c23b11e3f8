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

#include "layerlock/autodiff/adam.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace layerlock::autodiff {

AdamState::AdamState(const AdamConfig& config, const std::vector<Matrix>& params,
                     std::vector<bool> decay)
    : config_(config), decay_(std::move(decay)) {
  if (!(config.lr >= 0.0) || !(config.eps > 0.0) || config.beta1 < 0.0 || config.beta1 >= 1.0 ||
      config.beta2 < 0.0 || config.beta2 >= 1.0 || config.weight_decay < 0.0) {
    throw std::invalid_argument("AdamState: invalid hyper-parameters");
  }
  if (decay_.empty()) decay_.assign(params.size(), true);
  if (decay_.size() != params.size()) {
    throw std::invalid_argument("AdamState: decay mask has " + std::to_string(decay_.size()) +
                                " entries for " + std::to_string(params.size()) + " parameters");
  }
  for (const Matrix& p : params) {
    m_.emplace_back(p.rows(), p.cols());
    v_.emplace_back(p.rows(), p.cols());
  }
}

double AdamState::lr_at(std::size_t step) const {
  if (config_.schedule == Schedule::kConstant) return config_.lr;
  const double total = static_cast<double>(std::max<std::size_t>(config_.total_steps, 1));
  const double t = std::min(static_cast<double>(step), total) / total;
  const double floor = config_.min_lr_fraction;
  return config_.lr * (floor + (1.0 - floor) * 0.5 * (1.0 + std::cos(std::numbers::pi * t)));
}

void AdamState::step(std::vector<Matrix>& params, const std::vector<const Matrix*>& grads,
                     const std::vector<bool>& frozen) {
  if (params.size() != m_.size() || grads.size() != m_.size() ||
      (!frozen.empty() && frozen.size() != m_.size())) {
    throw std::invalid_argument("AdamState::step: parameter/gradient/mask counts differ");
  }
  const double lr = lr_at(step_);
  ++step_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!frozen.empty() && frozen[i]) continue;
    Matrix& p = params[i];
    const Matrix& g = *grads[i];
    if (!p.same_shape(g) || !p.same_shape(m_[i])) {
      throw std::invalid_argument("AdamState::step: parameter " + std::to_string(i) + " is " +
                                  p.shape_string() + ", gradient " + g.shape_string());
    }
    auto pd = p.data();
    const auto gd = g.data();
    auto md = m_[i].data();
    auto vd = v_[i].data();
    const double shrink = decay_[i] ? 1.0 - lr * config_.weight_decay : 1.0;
    for (std::size_t k = 0; k < pd.size(); ++k) {
      md[k] = config_.beta1 * md[k] + (1.0 - config_.beta1) * gd[k];
      vd[k] = config_.beta2 * vd[k] + (1.0 - config_.beta2) * gd[k] * gd[k];
      const double mhat = md[k] / bc1;
      const double vhat = vd[k] / bc2;
      pd[k] = pd[k] * shrink - lr * mhat / (std::sqrt(vhat) + config_.eps);
    }
  }
}

}  // namespace layerlock::autodiff
