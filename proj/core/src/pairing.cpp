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

#include "poscl/pairing.hpp"

#include <algorithm>
#include <cmath>

#include "poscl/errors.hpp"

namespace poscl {

void PairMask::set(std::size_t i, std::size_t j, bool value) {
  if (i >= size_ || j >= size_) throw RangeError("PairMask::set: index out of range");
  if (i == j) {
    if (value) throw ContractError("PairMask: a sample cannot be its own positive");
    return;
  }
  bits_[i * size_ + j] = value;
  bits_[j * size_ + i] = value;
}

std::size_t PairMask::row_count(std::size_t i) const {
  std::size_t n = 0;
  for (std::size_t j = 0; j < size_; ++j) n += bits_[i * size_ + j];
  return n;
}

std::size_t PairMask::total_positive() const {
  std::size_t n = 0;
  for (auto b : bits_) n += b;
  return n;
}

Tensor PairMask::as_tensor() const {
  std::vector<double> d(bits_.begin(), bits_.end());
  return Tensor({size_, size_}, std::move(d));
}

bool PairMask::is_symmetric() const {
  for (std::size_t i = 0; i < size_; ++i)
    for (std::size_t j = i + 1; j < size_; ++j)
      if (positive(i, j) != positive(j, i)) return false;
  return true;
}

bool PairMask::is_irreflexive() const {
  for (std::size_t i = 0; i < size_; ++i)
    if (positive(i, i)) return false;
  return true;
}

bool PairMask::subset_of(const PairMask& other) const {
  if (other.size_ != size_) throw DimensionError("PairMask::subset_of: size mismatch");
  for (std::size_t k = 0; k < bits_.size(); ++k)
    if (bits_[k] && !other.bits_[k]) return false;
  return true;
}

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::kPcl: return "pcl";
    case Strategy::kGcl: return "gcl";
    case Strategy::kSimclr: return "simclr";
  }
  return "?";
}

Strategy parse_strategy(const std::string& name) {
  if (name == "pcl") return Strategy::kPcl;
  if (name == "gcl") return Strategy::kGcl;
  if (name == "simclr") return Strategy::kSimclr;
  throw ConfigError("unknown pairing strategy '" + name + "' (expected pcl, gcl or simclr)");
}

void PairingConfig::validate() const {
  if (strategy == Strategy::kPcl && !(threshold > 0.0 && threshold < 1.0)) {
    throw ConfigError("pairing: threshold t must lie in (0, 1), got " + std::to_string(threshold));
  }
  if (strategy == Strategy::kGcl && partitions < 1) throw ConfigError("pairing: need at least one partition");
}

bool within_threshold(double a, double b, double t) { return std::abs(a - b) < t - kTieTolerance; }

PairMask build_position_mask(std::span<const double> positions, double t) {
  if (!(t > 0.0 && t < 1.0)) throw ConfigError("position mask: threshold t must lie in (0, 1)");
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (!(positions[i] >= 0.0 && positions[i] < 1.0)) {
      throw RangeError("position mask: position " + std::to_string(positions[i]) + " at index " + std::to_string(i) +
                       " outside [0, 1)");
    }
  }
  PairMask m(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i)
    for (std::size_t j = i + 1; j < positions.size(); ++j)
      if (within_threshold(positions[i], positions[j], t)) m.set(i, j, true);
  return m;
}

PairMask build_simclr_mask(std::size_t n_sources) {
  if (n_sources == 0) throw ContractError("simclr mask: need at least one source slice");
  PairMask m(2 * n_sources);
  for (std::size_t i = 0; i < n_sources; ++i) m.set(2 * i, 2 * i + 1, true);
  return m;
}

std::size_t gcl_partition(double position, std::size_t partitions) {
  if (partitions == 0) throw ConfigError("gcl: need at least one partition");
  const double scaled = std::floor(position * static_cast<double>(partitions) + kTieTolerance);
  const auto p = scaled < 0.0 ? std::size_t{0} : static_cast<std::size_t>(scaled);
  return std::min(p, partitions - 1);
}

PairMask build_gcl_mask(std::span<const double> positions, std::size_t partitions) {
  std::vector<std::size_t> part(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) part[i] = gcl_partition(positions[i], partitions);
  PairMask m(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i)
    for (std::size_t j = i + 1; j < positions.size(); ++j)
      if (part[i] == part[j]) m.set(i, j, true);
  return m;
}

PairMask build_mask(const PairingConfig& cfg, std::span<const double> positions) {
  cfg.validate();
  switch (cfg.strategy) {
    case Strategy::kPcl: return build_position_mask(positions, cfg.threshold);
    case Strategy::kGcl: return build_gcl_mask(positions, cfg.partitions);
    case Strategy::kSimclr:
      if (positions.size() % 2 != 0) throw DimensionError("simclr mask: batch of odd size " + std::to_string(positions.size()));
      return build_simclr_mask(positions.size() / 2);
  }
  throw ContractError("build_mask: unknown strategy");
}

FalseNegativeStats false_negative_stats(const PairMask& mask, std::span<const double> positions, double t_true) {
  if (!(t_true > 0.0 && t_true < 1.0)) throw ConfigError("false_negative_stats: t_true must lie in (0, 1)");
  if (mask.size() != positions.size()) throw DimensionError("false_negative_stats: mask and positions differ in size");
  FalseNegativeStats s;
  const std::size_t n = positions.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const bool similar = within_threshold(positions[i], positions[j], t_true);
      const bool pos = mask.positive(i, j);
      if (similar && !pos) ++s.false_neg_count;
      if (!similar && pos) ++s.false_pos_count;
    }
  }
  s.pair_count = n * (n - 1);
  if (s.pair_count) {
    s.false_neg_rate = static_cast<double>(s.false_neg_count) / static_cast<double>(s.pair_count);
    s.false_pos_rate = static_cast<double>(s.false_pos_count) / static_cast<double>(s.pair_count);
  }
  return s;
}

}  // namespace poscl
