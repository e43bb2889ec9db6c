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
#include <cstdint>
#include <span>
#include <vector>

#include "poscl/model.hpp"
#include "poscl/volume.hpp"

namespace poscl {

struct DiceScore {
  std::vector<double> per_class;  // classes 1..C-1; background is excluded
  double mean = 0.0;
};

/// Per-class Dice 2|P & T| / (|P| + |T|); a class absent from both scores 1.
DiceScore dice(std::span<const std::uint16_t> pred, std::span<const std::uint16_t> truth, std::size_t num_classes);

/// Dice of the model over every slice of the given volumes, pooled.
DiceScore evaluate_dice(const Params& params, const EncoderConfig& cfg, std::span<const Volume> volumes,
                        const PreprocessConfig& preprocess);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n - 1); 0 for n < 2
  std::size_t n = 0;
};
MeanStd mean_std(std::span<const double> values);

}  // namespace poscl
