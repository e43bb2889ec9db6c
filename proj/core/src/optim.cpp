// Copyright 2026 The poscl Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "poscl/optim.hpp"

#include <cmath>
#include <numbers>

#include "poscl/errors.hpp"

namespace poscl {

double cosine_lr(std::size_t step, std::size_t total_steps, double lr0) {
  if (total_steps == 0) throw ConfigError("cosine_lr: total_steps must be at least 1");
  if (step > total_steps) throw RangeError("cosine_lr: step past the end of the schedule");
  const double progress = static_cast<double>(step) / static_cast<double>(total_steps);
  return lr0 * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

namespace {

void adam_update(Params& params, const NamedGradients& grads, OptimizerState& state, double lr) {
  const auto& a = state.adam;
  const double t = static_cast<double>(state.step);
  const double correct1 = 1.0 - std::pow(a.beta1, t);
  const double correct2 = 1.0 - std::pow(a.beta2, t);
  for (const auto& [name, g] : grads) {
    auto m_it = state.first_moment.try_emplace(name, Tensor::zeros(g.shape())).first;
    auto v_it = state.second_moment.try_emplace(name, Tensor::zeros(g.shape())).first;
    auto m = m_it->second.data();
    auto v = v_it->second.data();
    auto w = params.at(name).data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = a.beta1 * m[i] + (1.0 - a.beta1) * g[i];
      v[i] = a.beta2 * v[i] + (1.0 - a.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correct1;
      const double v_hat = v[i] / correct2;
      w[i] -= lr * m_hat / (std::sqrt(v_hat) + a.epsilon);
    }
  }
}

}  // namespace

void optimizer_step(Params& params, const NamedGradients& grads, OptimizerState& state, double lr) {
  for (const auto& [name, g] : grads) {
    if (!g.all_finite()) {
      throw NumericAbort("non-finite gradient for '" + name + "' at optimizer step " + std::to_string(state.step));
    }
    if (g.shape() != params.at(name).shape()) {
      throw DimensionError("gradient for '" + name + "' has shape " + to_string(g.shape()) + ", parameter has " +
                           to_string(params.at(name).shape()));
    }
  }
  ++state.step;
  if (state.kind == OptimizerKind::kSgd) {
    for (const auto& [name, g] : grads) {
      auto w = params.at(name).data();
      for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * g[i];
    }
  } else {
    adam_update(params, grads, state, lr);
  }
  for (const auto& [name, _] : grads) {
    if (!params.at(name).all_finite()) {
      throw NumericAbort("parameter '" + name + "' became non-finite at optimizer step " + std::to_string(state.step));
    }
  }
}


}  // namespace poscl
