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
#include <vector>

#include "poscl/autodiff.hpp"
#include "poscl/pairing.hpp"

namespace poscl {

struct LossConfig {
  double temperature = 0.1;
  void validate() const;
};

struct LossReport {
  double total = 0.0;               // sum of per_sample
  std::vector<double> per_sample;   // one term per row of Z; 0 for skipped rows
  std::size_t skipped_count = 0;    // rows without any positive
};

struct PclLoss {
  ad::Var loss;  // scalar, differentiable through Z
  LossReport report;
};

/// Pairwise cosine similarity of the rows of z[n x d]. Rows with squared norm
/// below ad::kNormEpsilon are rejected.
ad::Var cosine_sim_matrix(const ad::Var& z);

/// Multi-positive contrastive loss over the rows of z.
///
/// For every row i with at least one positive j in the mask:
///
///   L_i = -(1/|P_i|) * sum_{j in P_i} log( exp(s_ij/T) / sum_{k != i} exp(s_ik/T) )
///
/// where s is the dot product of rows (callers pass unit-norm rows, so s is
/// cosine similarity) and T the temperature. The denominator runs over every
/// other row, positive or negative. Rows without positives contribute 0 and
/// are counted in skipped_count. The result is the sum over rows.
PclLoss pcl_loss(const ad::Var& z, const PairMask& mask, const LossConfig& cfg);

/// Forward-only evaluation on plain values.
LossReport pcl_loss_value(const Tensor& z, const PairMask& mask, const LossConfig& cfg);

}  // namespace poscl
