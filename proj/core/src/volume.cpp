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

#include "poscl/volume.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "poscl/errors.hpp"

namespace poscl {

namespace {

thread_local std::uint64_t g_label_reads = 0;

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::uint64_t label_reads() { return g_label_reads; }

Volume::Volume(VolumeDims dims, Spacing spacing, std::vector<float> intensities,
               std::optional<std::vector<std::uint16_t>> labels, std::size_t num_classes, std::string volume_id,
               std::string family_id)
    : dims_(dims),
      spacing_(spacing),
      intensities_(std::move(intensities)),
      labels_(std::move(labels)),
      num_classes_(num_classes),
      volume_id_(std::move(volume_id)),
      family_id_(std::move(family_id)) {
  if (dims_.nx == 0 || dims_.ny == 0) throw ConfigError("volume: in-plane extents must be positive");
  if (dims_.nz < 2) throw ConfigError("volume: need at least 2 slices, got " + std::to_string(dims_.nz));
  if (!(spacing_.sx > 0.0 && spacing_.sy > 0.0 && spacing_.sz > 0.0)) {
    throw ConfigError("volume: spacings must be positive");
  }
  const std::size_t n = dims_.nx * dims_.ny * dims_.nz;
  if (intensities_.size() != n) {
    throw DimensionError("volume: " + std::to_string(intensities_.size()) + " intensities for " +
                         std::to_string(n) + " voxels");
  }
  if (labels_) {
    if (labels_->size() != n) throw DimensionError("volume: label grid size differs from intensity grid");
    for (auto l : *labels_) {
      if (l >= num_classes_) {
        throw RangeError("volume: label " + std::to_string(l) + " outside [0, " + std::to_string(num_classes_) + ")");
      }
    }
  }
}

std::span<const std::uint16_t> Volume::labels() const {
  if (!labels_) throw ContractError("volume " + volume_id_ + " carries no labels");
  ++g_label_reads;
  return *labels_;
}

Volume Volume::with_intensities(std::vector<float> intensities) const {
  Volume out = *this;
  if (intensities.size() != out.intensities_.size()) throw DimensionError("with_intensities: size mismatch");
  out.intensities_ = std::move(intensities);
  return out;
}

Volume Volume::without_labels() const {
  return Volume(dims_, spacing_, intensities_, std::nullopt, num_classes_, volume_id_, family_id_);
}

std::span<const std::uint16_t> Slice2D::labels() const {
  if (!label) throw ContractError("slice of " + volume_id + " carries no labels");
  ++g_label_reads;
  return *label;
}

void PreprocessConfig::validate() const {
  if (height == 0 || width == 0) throw ConfigError("preprocess: target size must be positive");
  if (!(resolution_x > 0.0 && resolution_y > 0.0)) throw ConfigError("preprocess: resolution must be positive");
  if (!(percentile_lo >= 0.0 && percentile_lo < percentile_hi && percentile_hi <= 100.0)) {
    throw ConfigError("preprocess: need 0 <= percentile_lo < percentile_hi <= 100");
  }
}

void FamilySpec::validate() const {
  if (dims.nx < 4 || dims.ny < 4 || dims.nz < 4) {
    throw ConfigError("family " + family_id + ": each axis needs at least 4 voxels");
  }
  if (num_classes < 2) throw ConfigError("family " + family_id + ": need at least 2 classes");
  if (structures.empty()) throw ConfigError("family " + family_id + ": no structures");
  for (const auto& s : structures) {
    if (s.label == 0 || s.label >= num_classes) {
      throw ConfigError("family " + family_id + ": structure label must lie in [1, num_classes)");
    }
    if (!(s.radius_x > 0 && s.radius_y > 0 && s.radius_z > 0)) {
      throw ConfigError("family " + family_id + ": structure radii must be positive");
    }
  }
  if (!(spacing.sx > 0 && spacing.sy > 0 && spacing.sz > 0)) throw ConfigError("family: spacing must be positive");
}

FamilySpec default_family_a() {
  FamilySpec f;
  f.family_id = "A";
  f.dims = {16, 16, 24};
  f.spacing = {1.0, 1.0, 2.0};
  f.num_classes = 4;
  f.structures = {
      {.label = 1, .center_x = 0.38, .center_y = 0.45, .center_z = 0.30, .drift_x = 0.35, .drift_y = 0.0,
       .radius_x = 0.18, .radius_y = 0.15, .radius_z = 0.30, .intensity = 0.9, .intensity_slope = 0.5},
      {.label = 2, .center_x = 0.62, .center_y = 0.55, .center_z = 0.55, .drift_x = -0.25, .drift_y = 0.25,
       .radius_x = 0.14, .radius_y = 0.20, .radius_z = 0.35, .intensity = 0.6, .intensity_slope = -0.4},
      {.label = 3, .center_x = 0.50, .center_y = 0.38, .center_z = 0.78, .drift_x = 0.0, .drift_y = -0.35,
       .radius_x = 0.20, .radius_y = 0.13, .radius_z = 0.22, .intensity = 1.2, .intensity_slope = 0.3},
  };
  f.noise_sigma = 0.15;
  f.jitter_center = 0.02;
  f.jitter_z = 0.02;
  f.distractors = 3;
  return f;
}

FamilySpec default_family_b() {
  FamilySpec f;
  f.family_id = "B";
  f.dims = {12, 12, 20};
  f.spacing = {1.25, 1.25, 2.5};
  f.num_classes = 3;
  f.structures = {
      {.label = 1, .center_x = 0.36, .center_y = 0.56, .center_z = 0.40, .drift_x = 0.2, .drift_y = -0.2,
       .radius_x = 0.22, .radius_y = 0.18, .radius_z = 0.36, .intensity = 1.0, .intensity_slope = -0.3},
      {.label = 2, .center_x = 0.62, .center_y = 0.42, .center_z = 0.66, .drift_x = -0.3, .drift_y = 0.1,
       .radius_x = 0.16, .radius_y = 0.21, .radius_z = 0.30, .intensity = 0.7, .intensity_slope = 0.6},
  };
  f.body_radius_x = 0.42;
  f.body_radius_y = 0.44;
  f.body_intensity = 0.3;
  return f;
}

Volume generate_synthetic_volume(const FamilySpec& family, std::uint64_t seed, std::string volume_id) {
  family.validate();
  Rng rng(Rng::derive(seed, fnv1a(family.family_id)));
  const auto [nx, ny, nz] = family.dims;

  struct Jittered {
    StructureSpec s;
    double radius_scale;
  };
  const double dx = rng.uniform(-1.0, 1.0) * family.jitter_center;
  const double dy = rng.uniform(-1.0, 1.0) * family.jitter_center;
  std::vector<Jittered> parts;
  for (const auto& s : family.structures) {
    Jittered j{s, 1.0 + rng.uniform(-1.0, 1.0) * family.jitter_radius};
    j.s.center_x += dx + rng.uniform(-0.5, 0.5) * family.jitter_center;
    j.s.center_y += dy + rng.uniform(-0.5, 0.5) * family.jitter_center;
    j.s.center_z += rng.uniform(-1.0, 1.0) * family.jitter_z;
    j.s.intensity *= 1.0 + rng.uniform(-1.0, 1.0) * family.jitter_intensity;
    parts.push_back(j);
  }
  struct Blob {
    double cx, cy, r, z_lo, z_hi, intensity;
  };
  std::vector<Blob> blobs;
  for (std::size_t k = 0; k < family.distractors; ++k) {
    Blob b;
    b.cx = 0.5 + dx + rng.uniform(-0.3, 0.3);
    b.cy = 0.5 + dy + rng.uniform(-0.3, 0.3);
    b.r = rng.uniform(family.distractor_radius_lo, family.distractor_radius_hi);
    const double zc = rng.uniform(0.0, 1.0);
    const double zh = rng.uniform(0.15, 0.5);
    b.z_lo = zc - zh;
    b.z_hi = zc + zh;
    b.intensity = rng.uniform(family.distractor_intensity_lo, family.distractor_intensity_hi);
    blobs.push_back(b);
  }

  std::vector<float> intensities(nx * ny * nz);
  std::vector<std::uint16_t> labels(nx * ny * nz, 0);
  for (std::size_t z = 0; z < nz; ++z) {
    const double w = (static_cast<double>(z) + 0.5) / static_cast<double>(nz);
    for (std::size_t y = 0; y < ny; ++y) {
      const double v = (static_cast<double>(y) + 0.5) / static_cast<double>(ny);
      for (std::size_t x = 0; x < nx; ++x) {
        const double u = (static_cast<double>(x) + 0.5) / static_cast<double>(nx);
        const std::size_t i = x + nx * (y + ny * z);
        const double bu = (u - 0.5 - dx) / family.body_radius_x;
        const double bv = (v - 0.5 - dy) / family.body_radius_y;
        double value = bu * bu + bv * bv <= 1.0 ? family.body_intensity : 0.0;
        for (const auto& b : blobs) {
          const double du = (u - b.cx) / b.r;
          const double dv = (v - b.cy) / b.r;
          if (w >= b.z_lo && w <= b.z_hi && du * du + dv * dv <= 1.0) value = b.intensity;
        }
        for (const auto& [s, rs] : parts) {
          const double dz = (w - s.center_z) / (s.radius_z * rs);
          const double section = 1.0 - dz * dz;
          if (section <= 0.0) continue;
          const double r = std::sqrt(section) * rs;
          const double cx = s.center_x + s.drift_x * (w - s.center_z);
          const double cy = s.center_y + s.drift_y * (w - s.center_z);
          const double eu = (u - cx) / (s.radius_x * r);
          const double ev = (v - cy) / (s.radius_y * r);
          if (eu * eu + ev * ev <= 1.0) {
            labels[i] = s.label;
            value = s.intensity + s.intensity_slope * (w - s.center_z);
          }
        }
        intensities[i] = static_cast<float>(value + family.noise_sigma * rng.normal());
      }
    }
  }

  // Every class must appear at least once; a tiny jittered structure can vanish
  // between voxel centers, in which case its center voxel is claimed.
  std::vector<std::size_t> counts(family.num_classes, 0);
  for (auto l : labels) ++counts[l];
  for (const auto& [s, rs] : parts) {
    if (counts[s.label] != 0) continue;
    auto to_index = [](double frac, std::size_t n) {
      return std::min(n - 1, static_cast<std::size_t>(std::max(0.0, frac) * static_cast<double>(n)));
    };
    const std::size_t z = to_index(s.center_z, nz);
    const std::size_t i = to_index(s.center_x, nx) + nx * (to_index(s.center_y, ny) + ny * z);
    --counts[labels[i]];
    labels[i] = s.label;
    ++counts[s.label];
    intensities[i] = static_cast<float>(s.intensity);
  }
  if (counts[0] == 0) {
    throw ConfigError("family " + family.family_id + ": structures cover every voxel, background missing");
  }
  for (std::size_t c = 1; c < family.num_classes; ++c) {
    if (counts[c] == 0) throw ConfigError("family " + family.family_id + ": no structure carries label " + std::to_string(c));
  }

  if (volume_id.empty()) volume_id = family.family_id + "-" + std::to_string(seed);
  return Volume(family.dims, family.spacing, std::move(intensities), std::move(labels), family.num_classes,
                std::move(volume_id), family.family_id);
}

double percentile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw ContractError("percentile of an empty set");
  const double rank = p / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

Volume percentile_normalize(const Volume& v, double lo, double hi) {
  const auto src = v.intensities();
  std::vector<double> sorted(src.begin(), src.end());
  std::sort(sorted.begin(), sorted.end());
  const double x_lo = percentile(sorted, lo);
  const double x_hi = percentile(sorted, hi);
  std::vector<float> out(src.size(), 0.0f);
  if (x_hi > x_lo) {
    const double range = x_hi - x_lo;
    for (std::size_t i = 0; i < src.size(); ++i) {
      const double c = std::clamp(static_cast<double>(src[i]), x_lo, x_hi);
      out[i] = static_cast<float>((c - x_lo) / range);
    }
  }
  return v.with_intensities(std::move(out));
}

Slice2D extract_slice(const Volume& v, std::size_t m, LabelPolicy labels) {
  const auto& d = v.dims();
  if (m >= d.nz) {
    throw RangeError("extract_slice: index " + std::to_string(m) + " outside [0, " + std::to_string(d.nz) + ")");
  }
  Slice2D s;
  s.width = d.nx;
  s.height = d.ny;
  s.spacing_x = v.spacing().sx;
  s.spacing_y = v.spacing().sy;
  const std::size_t plane = d.nx * d.ny;
  const auto src = v.intensities().subspan(m * plane, plane);
  s.pixels.assign(src.begin(), src.end());
  if (labels == LabelPolicy::kKeep && v.has_labels()) {
    const auto l = v.labels().subspan(m * plane, plane);
    s.label.emplace(l.begin(), l.end());
  }
  s.position = static_cast<double>(m) / static_cast<double>(d.nz);
  s.volume_id = v.volume_id();
  s.family_id = v.family_id();
  s.slice_index = m;
  s.slice_count = d.nz;
  return s;
}

namespace {

// Output pixel centers mapped back onto input pixel coordinates, clamped to the grid.
double source_coord(std::size_t dst, double ratio, std::size_t n_in) {
  const double c = (static_cast<double>(dst) + 0.5) * ratio - 0.5;
  return std::clamp(c, 0.0, static_cast<double>(n_in - 1));
}

}  // namespace

Slice2D resample_pad(const Slice2D& s, const PreprocessConfig& cfg) {
  cfg.validate();
  if (!(s.spacing_x > 0.0 && s.spacing_y > 0.0)) throw ConfigError("resample_pad: slice spacing unknown");
  const double rx = cfg.resolution_x / s.spacing_x;  // input pixels per output pixel
  const double ry = cfg.resolution_y / s.spacing_y;
  const auto w = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(static_cast<double>(s.width) / rx)));
  const auto h = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(static_cast<double>(s.height) / ry)));
  if (w > cfg.width || h > cfg.height) {
    throw ConfigError("resample_pad: resampled slice is " + std::to_string(h) + "x" + std::to_string(w) +
                      " but target size is " + std::to_string(cfg.height) + "x" + std::to_string(cfg.width) +
                      "; cropping is not supported, increase the target size");
  }
  const std::size_t top = (cfg.height - h) / 2;
  const std::size_t left = (cfg.width - w) / 2;

  Slice2D out = s;
  out.width = cfg.width;
  out.height = cfg.height;
  out.spacing_x = cfg.resolution_x;
  out.spacing_y = cfg.resolution_y;
  out.pixels.assign(cfg.width * cfg.height, 0.0);
  if (s.label) out.label.emplace(cfg.width * cfg.height, 0);

  for (std::size_t y = 0; y < h; ++y) {
    const double sy = source_coord(y, ry, s.height);
    const auto y0 = static_cast<std::size_t>(sy);
    const auto y1 = std::min(y0 + 1, s.height - 1);
    const double fy = sy - static_cast<double>(y0);
    const auto yn = std::min(s.height - 1, static_cast<std::size_t>(std::floor(sy + 0.5)));
    for (std::size_t x = 0; x < w; ++x) {
      const double sx = source_coord(x, rx, s.width);
      const auto x0 = static_cast<std::size_t>(sx);
      const auto x1 = std::min(x0 + 1, s.width - 1);
      const double fx = sx - static_cast<double>(x0);
      const double top_row = s.pixel(x0, y0) + fx * (s.pixel(x1, y0) - s.pixel(x0, y0));
      const double bottom_row = s.pixel(x0, y1) + fx * (s.pixel(x1, y1) - s.pixel(x0, y1));
      const std::size_t dst = (y + top) * cfg.width + (x + left);
      out.pixels[dst] = top_row + fy * (bottom_row - top_row);
      if (s.label) {
        const auto xn = std::min(s.width - 1, static_cast<std::size_t>(std::floor(sx + 0.5)));
        (*out.label)[dst] = (*s.label)[yn * s.width + xn];
      }
    }
  }
  return out;
}

std::vector<SliceRef> sample_slice_refs(std::span<const std::size_t> slice_counts, std::size_t n, Rng& rng) {
  if (slice_counts.empty()) throw ContractError("sample_batch: empty pool");
  if (n == 0) throw ContractError("sample_batch: batch size must be at least 1");
  const std::size_t total = std::accumulate(slice_counts.begin(), slice_counts.end(), std::size_t{0});
  if (n > total) {
    throw ContractError("sample_batch: batch of " + std::to_string(n) + " exceeds the " + std::to_string(total) +
                        " slices in the pool");
  }
  std::vector<SliceRef> all;
  all.reserve(total);
  for (std::size_t v = 0; v < slice_counts.size(); ++v)
    for (std::size_t m = 0; m < slice_counts[v]; ++m) all.push_back({v, m});
  // partial Fisher-Yates
  for (std::size_t i = 0; i < n; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(total - i));
    std::swap(all[i], all[j]);
  }
  all.resize(n);
  return all;
}

SliceBatch sample_batch(std::span<const Volume> pool, std::size_t n, Rng& rng, LabelPolicy labels) {
  std::vector<std::size_t> counts;
  counts.reserve(pool.size());
  for (const auto& v : pool) counts.push_back(v.slice_count());
  SliceBatch batch;
  for (const auto& r : sample_slice_refs(counts, n, rng)) batch.push_back(extract_slice(pool[r.volume], r.slice, labels));
  return batch;
}

}  // namespace poscl
