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

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "poscl/rng.hpp"

namespace poscl {

struct VolumeDims {
  std::size_t nx = 0;
  std::size_t ny = 0;
  std::size_t nz = 0;  // slice count n along z
  friend bool operator==(const VolumeDims&, const VolumeDims&) = default;
};

struct Spacing {
  double sx = 1.0;
  double sy = 1.0;
  double sz = 1.0;
  friend bool operator==(const Spacing&, const Spacing&) = default;
};

/// Number of times label grids were read on the calling thread.
///
/// Every label accessor on Volume and Slice2D bumps it. The pretraining path
/// measures the delta around itself and must observe zero.
std::uint64_t label_reads();

/// Immutable 3D scalar grid, x-fastest row-major, with optional per-voxel labels.
class Volume {
 public:
  Volume(VolumeDims dims, Spacing spacing, std::vector<float> intensities,
         std::optional<std::vector<std::uint16_t>> labels, std::size_t num_classes, std::string volume_id,
         std::string family_id);

  const VolumeDims& dims() const { return dims_; }
  const Spacing& spacing() const { return spacing_; }
  std::size_t slice_count() const { return dims_.nz; }
  std::size_t voxel_count() const { return intensities_.size(); }
  std::size_t num_classes() const { return num_classes_; }
  const std::string& volume_id() const { return volume_id_; }
  const std::string& family_id() const { return family_id_; }

  std::span<const float> intensities() const { return intensities_; }
  float intensity(std::size_t x, std::size_t y, std::size_t z) const { return intensities_[index(x, y, z)]; }

  bool has_labels() const { return labels_.has_value(); }
  /// Counted access; see label_reads().
  std::span<const std::uint16_t> labels() const;

  std::size_t index(std::size_t x, std::size_t y, std::size_t z) const { return x + dims_.nx * (y + dims_.ny * z); }

  /// Copy with new intensities and the same labels and metadata.
  Volume with_intensities(std::vector<float> intensities) const;
  /// Copy with the label grid removed. Does not read the labels.
  Volume without_labels() const;

  friend bool operator==(const Volume&, const Volume&) = default;

 private:
  VolumeDims dims_;
  Spacing spacing_;
  std::vector<float> intensities_;
  std::optional<std::vector<std::uint16_t>> labels_;
  std::size_t num_classes_ = 0;
  std::string volume_id_;
  std::string family_id_;
};

/// One xy-plane slice. Pixels are row-major with x fastest: pixel(x, y) = pixels[y * width + x].
struct Slice2D {
  std::size_t width = 0;
  std::size_t height = 0;
  double spacing_x = 1.0;
  double spacing_y = 1.0;
  std::vector<double> pixels;
  std::optional<std::vector<std::uint16_t>> label;
  double position = 0.0;  // slice_index / slice_count
  std::string volume_id;
  std::string family_id;
  std::size_t slice_index = 0;
  std::size_t slice_count = 0;

  double pixel(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
  /// Counted access; see label_reads().
  std::span<const std::uint16_t> labels() const;
};

using SliceBatch = std::vector<Slice2D>;

struct PreprocessConfig {
  double resolution_x = 1.0;  // mm per output pixel
  double resolution_y = 1.0;
  std::size_t height = 16;
  std::size_t width = 16;
  double percentile_lo = 1.0;
  double percentile_hi = 99.0;

  void validate() const;
};

/// One ellipsoidal structure of a phantom. Coordinates are fractions of the
/// in-plane extent (x, y) or of the slice axis (z), so families of different
/// voxel counts can share a description.
struct StructureSpec {
  std::uint16_t label = 1;
  double center_x = 0.5;
  double center_y = 0.5;
  double center_z = 0.5;
  double drift_x = 0.0;  // center_x moves by drift_x * (z - center_z)
  double drift_y = 0.0;
  double radius_x = 0.2;
  double radius_y = 0.2;
  double radius_z = 0.3;
  double intensity = 1.0;
  double intensity_slope = 0.0;  // intensity change per unit z
};

struct FamilySpec {
  std::string family_id = "A";
  VolumeDims dims{16, 16, 24};
  Spacing spacing{1.0, 1.0, 2.0};
  std::size_t num_classes = 4;
  std::vector<StructureSpec> structures;
  double body_radius_x = 0.45;  // unlabeled background tissue ellipse
  double body_radius_y = 0.40;
  double body_intensity = 0.25;
  double noise_sigma = 0.05;
  double jitter_center = 0.04;   // per-volume offset, fraction of extent
  double jitter_radius = 0.10;   // per-volume relative radius scale
  double jitter_z = 0.04;        // per-volume shift of structure z-centers
  double jitter_intensity = 0.10;
  /// Unlabeled blobs placed at random per volume (background tissue that
  /// differs between subjects). Each gets a random center, radius, z-range
  /// and intensity from the ranges below.
  std::size_t distractors = 0;
  double distractor_radius_lo = 0.06;
  double distractor_radius_hi = 0.14;
  double distractor_intensity_lo = 0.5;
  double distractor_intensity_hi = 1.2;

  void validate() const;
};

/// Phantom family used for semi-supervised runs: 16x16x24, three structures.
FamilySpec default_family_a();
/// Differently shaped family (12x12x20 at coarser spacing, two structures) for transfer runs.
FamilySpec default_family_b();

/// Deterministic phantom for (family, seed).
Volume generate_synthetic_volume(const FamilySpec& family, std::uint64_t seed, std::string volume_id = {});

/// Clip to the [lo, hi] intensity percentiles and map affinely onto [0, 1].
/// Percentiles interpolate linearly at rank p/100 * (count - 1).
Volume percentile_normalize(const Volume& v, double lo = 1.0, double hi = 99.0);

/// Linear-interpolation percentile of arbitrary values, p in [0, 100].
double percentile(std::span<const double> sorted_values, double p);

enum class LabelPolicy { kKeep, kDrop };

Slice2D extract_slice(const Volume& v, std::size_t m, LabelPolicy labels = LabelPolicy::kKeep);

/// In-plane resample to the configured resolution (bilinear for pixels,
/// nearest for labels) followed by symmetric zero padding to the configured size.
Slice2D resample_pad(const Slice2D& s, const PreprocessConfig& cfg);

struct SliceRef {
  std::size_t volume = 0;
  std::size_t slice = 0;
  friend bool operator==(const SliceRef&, const SliceRef&) = default;
};

/// N distinct (volume, slice) pairs drawn uniformly from the pool.
std::vector<SliceRef> sample_slice_refs(std::span<const std::size_t> slice_counts, std::size_t n, Rng& rng);

SliceBatch sample_batch(std::span<const Volume> pool, std::size_t n, Rng& rng,
                        LabelPolicy labels = LabelPolicy::kKeep);

}  // namespace poscl
