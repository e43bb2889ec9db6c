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

#include "poscl/augment.hpp"

#include <cmath>
#include <numbers>

#include "poscl/errors.hpp"

namespace poscl {

void AugConfig::validate() const {
  if (!(max_translate >= 0.0 && max_translate <= 0.5)) throw ConfigError("augment: max_translate must lie in [0, 0.5]");
  if (!(max_rotate_deg >= 0.0)) throw ConfigError("augment: max_rotate_deg must be non-negative");
  if (!(scale_lo > 0.0 && scale_lo <= 1.0 && 1.0 <= scale_hi)) {
    throw ConfigError("augment: scale range must satisfy 0 < lo <= 1 <= hi");
  }
}

AffineParams sample_affine(const Slice2D& s, const AugConfig& cfg, Rng& rng) {
  cfg.validate();
  AffineParams p;
  p.translate_x = rng.uniform(-1.0, 1.0) * cfg.max_translate * static_cast<double>(s.width);
  p.translate_y = rng.uniform(-1.0, 1.0) * cfg.max_translate * static_cast<double>(s.height);
  p.rotate_deg = rng.uniform(-1.0, 1.0) * cfg.max_rotate_deg;
  p.scale = rng.uniform(cfg.scale_lo, cfg.scale_hi);
  return p;
}

Slice2D apply_affine(const Slice2D& s, const AffineParams& params) {
  if (s.pixels.empty()) throw ContractError("augment: empty slice");
  if (!(params.scale > 0.0)) throw ConfigError("augment: scale must be positive");
  Slice2D out = s;
  out.label.reset();
  const double cx = (static_cast<double>(s.width) - 1.0) / 2.0;
  const double cy = (static_cast<double>(s.height) - 1.0) / 2.0;
  const double theta = params.rotate_deg * std::numbers::pi / 180.0;
  const double c = std::cos(theta);
  const double sn = std::sin(theta);
  const auto W = static_cast<long>(s.width);
  const auto H = static_cast<long>(s.height);

  auto fetch = [&](long x, long y) -> double {
    return (x < 0 || y < 0 || x >= W || y >= H) ? 0.0 : s.pixels[static_cast<std::size_t>(y * W + x)];
  };

  for (long y = 0; y < H; ++y) {
    for (long x = 0; x < W; ++x) {
      // Inverse map: undo scale, then rotation, then translation.
      const double ux = (static_cast<double>(x) - cx) / params.scale;
      const double uy = (static_cast<double>(y) - cy) / params.scale;
      const double sx = c * ux + sn * uy + cx - params.translate_x;
      const double sy = -sn * ux + c * uy + cy - params.translate_y;
      const double fx0 = std::floor(sx);
      const double fy0 = std::floor(sy);
      const double fx = sx - fx0;
      const double fy = sy - fy0;
      const auto x0 = static_cast<long>(fx0);
      const auto y0 = static_cast<long>(fy0);
      const double v = (1.0 - fx) * (1.0 - fy) * fetch(x0, y0) + fx * (1.0 - fy) * fetch(x0 + 1, y0) +
                       (1.0 - fx) * fy * fetch(x0, y0 + 1) + fx * fy * fetch(x0 + 1, y0 + 1);
      out.pixels[static_cast<std::size_t>(y * W + x)] = v;
    }
  }
  return out;
}

Slice2D random_augment(const Slice2D& s, const AugConfig& cfg, Rng& rng) {
  return apply_affine(s, sample_affine(s, cfg, rng));
}

AugBatch make_contrastive_batch(const SliceBatch& batch, const AugConfig& cfg, Rng& rng) {
  if (batch.empty()) throw ContractError("make_contrastive_batch: empty batch");
  AugBatch out;
  out.images.reserve(2 * batch.size());
  for (const auto& s : batch) {
    for (int view = 0; view < 2; ++view) {
      out.images.push_back(random_augment(s, cfg, rng));
      out.positions.push_back(s.position);
      out.volume_ids.push_back(s.volume_id);
    }
  }
  return out;
}

}  // namespace poscl
