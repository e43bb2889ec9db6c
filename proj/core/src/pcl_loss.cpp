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

#include "poscl/pcl_loss.hpp"

#include <string>

#include "poscl/errors.hpp"

namespace poscl {

void LossConfig::validate() const {
  if (!(temperature > 0.0)) throw ConfigError("loss: temperature must be positive");
}

ad::Var cosine_sim_matrix(const ad::Var& z) {
  auto normalized = ad::l2_normalize_rows(z);
  if (normalized.degenerate_rows != 0) {
    throw DomainError("cosine_sim_matrix: " + std::to_string(normalized.degenerate_rows) + " zero row(s)");
  }
  return ad::matmul(normalized.rows, ad::transpose(normalized.rows));
}

PclLoss pcl_loss(const ad::Var& z, const PairMask& mask, const LossConfig& cfg) {
  cfg.validate();
  if (z.value().rank() != 2) throw DimensionError("pcl_loss: embeddings must be rank 2, got " + to_string(z.shape()));
  const std::size_t n = z.shape()[0];
  if (mask.size() != n) {
    throw DimensionError("pcl_loss: mask of size " + std::to_string(mask.size()) + " for " + std::to_string(n) +
                         " embeddings");
  }
  if (n < 2) throw DimensionError("pcl_loss: need at least 2 embeddings");

  ad::Graph& g = z.graph();
  const ad::Var logits = ad::scale(ad::matmul(z, ad::transpose(z)), 1.0 / cfg.temperature);

  Tensor others = Tensor::filled({n, n}, 1.0);
  Tensor weights = Tensor::zeros({n, n});
  Tensor active = Tensor::zeros({n});
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < n; ++i) {
    others.at(i, i) = 0.0;
    const std::size_t count = mask.row_count(i);
    if (count == 0) {
      ++skipped;
      continue;
    }
    active[i] = 1.0;
    for (std::size_t j = 0; j < n; ++j)
      if (mask.positive(i, j)) weights.at(i, j) = 1.0 / static_cast<double>(count);
  }

  // L_i = logsumexp_{k != i}(logits_ik) - mean_{j in P_i}(logits_ij)
  const ad::Var denominator = ad::masked_logsumexp_rows(logits, others);
  const ad::Var numerator = ad::sum(ad::mul(logits, g.constant(std::move(weights))), 1);
  const ad::Var per_sample = ad::mul(ad::sub(denominator, numerator), g.constant(std::move(active)));
  const ad::Var total = ad::sum(per_sample);

  PclLoss out{total, {}};
  out.report.per_sample = per_sample.value().values();
  out.report.total = total.value().item();
  out.report.skipped_count = skipped;
  return out;
}

LossReport pcl_loss_value(const Tensor& z, const PairMask& mask, const LossConfig& cfg) {
  ad::Graph g;
  return pcl_loss(g.constant(z), mask, cfg).report;
}

}  // namespace poscl
