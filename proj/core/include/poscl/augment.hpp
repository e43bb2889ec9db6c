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

#include <string>
#include <vector>

#include "poscl/rng.hpp"
#include "poscl/volume.hpp"

namespace poscl {

/// Ranges of the random spatial augmentations. Defaults are desk settings.
struct AugConfig {
  double max_translate = 0.1;  // fraction of image extent, per axis
  double max_rotate_deg = 15.0;
  double scale_lo = 0.9;
  double scale_hi = 1.1;

  void validate() const;
  static AugConfig none() { return {0.0, 0.0, 1.0, 1.0}; }
};

/// One concrete draw of the augmentation. Translation is in pixels; positive
/// rotation turns the image clockwise as displayed (y pointing down).
struct AffineParams {
  double translate_x = 0.0;
  double translate_y = 0.0;
  double rotate_deg = 0.0;
  double scale = 1.0;
};

AffineParams sample_affine(const Slice2D& s, const AugConfig& cfg, Rng& rng);

/// Translate, then rotate about the image center, then scale about the image
/// center, as one inverse-mapped bilinear resample with zero fill. Position and
/// the other metadata pass through unchanged; the label grid is dropped because
/// it would no longer line up with the pixels.
Slice2D apply_affine(const Slice2D& s, const AffineParams& params);

Slice2D random_augment(const Slice2D& s, const AugConfig& cfg, Rng& rng);

/// 2N augmented slices; entries 2i and 2i+1 are two views of source slice i.
struct AugBatch {
  std::vector<Slice2D> images;
  std::vector<double> positions;
  std::vector<std::string> volume_ids;

  std::size_t size() const { return images.size(); }
};

AugBatch make_contrastive_batch(const SliceBatch& batch, const AugConfig& cfg, Rng& rng);

}  // namespace poscl
