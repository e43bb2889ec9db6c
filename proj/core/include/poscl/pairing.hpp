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
#include <string>
#include <vector>

#include "poscl/tensor.hpp"

namespace poscl {

/// Symmetric, irreflexive positive-pair relation over a 2N-sample batch.
class PairMask {
 public:
  explicit PairMask(std::size_t size) : size_(size), bits_(size * size, 0) {}

  std::size_t size() const { return size_; }
  bool positive(std::size_t i, std::size_t j) const { return bits_[i * size_ + j] != 0; }
  /// Sets (i, j) and (j, i). The diagonal cannot be set.
  void set(std::size_t i, std::size_t j, bool value);

  /// |positives of i|
  std::size_t row_count(std::size_t i) const;
  /// Ordered positive pairs.
  std::size_t total_positive() const;
  /// 0/1 matrix view.
  Tensor as_tensor() const;

  bool is_symmetric() const;
  bool is_irreflexive() const;
  /// Entrywise a => b.
  bool subset_of(const PairMask& other) const;

  friend bool operator==(const PairMask&, const PairMask&) = default;

 private:
  std::size_t size_;
  std::vector<std::uint8_t> bits_;
};

enum class Strategy { kPcl, kGcl, kSimclr };

std::string to_string(Strategy s);
Strategy parse_strategy(const std::string& name);

struct PairingConfig {
  Strategy strategy = Strategy::kPcl;
  double threshold = 0.1;        // pcl: positive iff |position difference| < threshold
  std::size_t partitions = 4;    // gcl: number of z partitions per volume

  void validate() const;
  static PairingConfig pcl(double t) { return {Strategy::kPcl, t, 4}; }
  static PairingConfig gcl(std::size_t s) { return {Strategy::kGcl, 0.1, s}; }
  static PairingConfig simclr() { return {Strategy::kSimclr, 0.1, 4}; }
};

/// Position differences closer to the threshold than this count as ties and
/// are negative. Positions are ratios m/n, whose differences carry rounding.
inline constexpr double kTieTolerance = 1e-12;

/// True when |a - b| < t, with ties at t (within kTieTolerance) negative.
bool within_threshold(double a, double b, double t);

PairMask build_position_mask(std::span<const double> positions, double t);
/// Only the augmentation twins (2i, 2i+1) of each of n_sources slices.
PairMask build_simclr_mask(std::size_t n_sources);
std::size_t gcl_partition(double position, std::size_t partitions);
PairMask build_gcl_mask(std::span<const double> positions, std::size_t partitions);

/// Dispatches on the configured strategy. positions has length 2N with twins adjacent.
PairMask build_mask(const PairingConfig& cfg, std::span<const double> positions);

struct FalseNegativeStats {
  std::size_t false_neg_count = 0;
  double false_neg_rate = 0.0;
  std::size_t false_pos_count = 0;
  double false_pos_rate = 0.0;
  std::size_t pair_count = 0;  // ordered off-diagonal pairs, 2N(2N - 1)
};

/// Compares a mask with position ground truth: similar(i, j) iff |delta| < t_true.
FalseNegativeStats false_negative_stats(const PairMask& mask, std::span<const double> positions, double t_true);

}  // namespace poscl
