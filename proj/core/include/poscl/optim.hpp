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

#pragma once

#include <cstddef>
#include <map>
#include <string>

#include "poscl/model.hpp"

namespace poscl {

/// lr0 * (1 + cos(pi * step / total_steps)) / 2
double cosine_lr(std::size_t step, std::size_t total_steps, double lr0);

enum class OptimizerKind { kSgd, kAdam };

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct OptimizerState {
  OptimizerKind kind = OptimizerKind::kSgd;
  AdamConfig adam;
  std::size_t step = 0;
  std::map<std::string, Tensor> first_moment;
  std::map<std::string, Tensor> second_moment;

  static OptimizerState sgd() { return {}; }
  static OptimizerState make_adam(AdamConfig cfg = {}) {
    OptimizerState s;
    s.kind = OptimizerKind::kAdam;
    s.adam = cfg;
    return s;
  }
};

using NamedGradients = std::map<std::string, Tensor>;

/// Updates the params named in grads; others are left alone. Throws
/// NumericAbort naming the step and tensor when a gradient is not finite.
void optimizer_step(Params& params, const NamedGradients& grads, OptimizerState& state, double lr);

}  // namespace poscl
