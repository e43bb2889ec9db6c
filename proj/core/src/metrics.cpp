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

#include "poscl/metrics.hpp"

#include <cmath>

#include "poscl/errors.hpp"
#include "poscl/train.hpp"

namespace poscl {

DiceScore dice(std::span<const std::uint16_t> pred, std::span<const std::uint16_t> truth, std::size_t num_classes) {
  if (pred.size() != truth.size()) {
    throw DimensionError("dice: prediction has " + std::to_string(pred.size()) + " pixels, truth " +
                         std::to_string(truth.size()));
  }
  if (num_classes < 2) throw ConfigError("dice: need at least 2 classes");
  std::vector<std::size_t> p(num_classes, 0), t(num_classes, 0), both(num_classes, 0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] >= num_classes || truth[i] >= num_classes) {
      throw RangeError("dice: label outside [0, " + std::to_string(num_classes) + ") at pixel " + std::to_string(i));
    }
    ++p[pred[i]];
    ++t[truth[i]];
    if (pred[i] == truth[i]) ++both[pred[i]];
  }
  DiceScore out;
  for (std::size_t c = 1; c < num_classes; ++c) {
    const std::size_t denom = p[c] + t[c];
    out.per_class.push_back(denom == 0 ? 1.0 : 2.0 * static_cast<double>(both[c]) / static_cast<double>(denom));
    out.mean += out.per_class.back();
  }
  out.mean /= static_cast<double>(num_classes - 1);
  return out;
}

DiceScore evaluate_dice(const Params& params, const EncoderConfig& cfg, std::span<const Volume> volumes,
                        const PreprocessConfig& preprocess) {
  std::vector<std::uint16_t> pred, truth;
  for (const auto& v : volumes) {
    if (!v.has_labels()) throw ContractError("evaluate: volume " + v.volume_id() + " has no labels");
    const auto slices = prepare_slices(v, preprocess, LabelPolicy::kKeep);
    const auto p = predict_labels(params, cfg, stack_images(slices, cfg));
    pred.insert(pred.end(), p.begin(), p.end());
    for (const auto& s : slices) {
      const auto l = s.labels();
      truth.insert(truth.end(), l.begin(), l.end());
    }
  }
  return dice(pred, truth, cfg.num_classes);
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd r;
  r.n = values.size();
  if (r.n == 0) return r;
  for (double v : values) r.mean += v;
  r.mean /= static_cast<double>(r.n);
  if (r.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - r.mean) * (v - r.mean);
    r.std = std::sqrt(ss / static_cast<double>(r.n - 1));
  }
  return r;
}

}  // namespace poscl
