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


#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "poscl/errors.hpp"
#include "poscl/pcl_loss.hpp"

using namespace poscl;

namespace {

Tensor to_tensor(const oracle::Matrix& z) {
  std::vector<double> flat;
  for (const auto& row : z) flat.insert(flat.end(), row.begin(), row.end());
  return Tensor({z.size(), z[0].size()}, std::move(flat));
}

PairMask to_mask(const oracle::Mask& m) {
  PairMask out(m.size());
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = i + 1; j < m.size(); ++j) out.set(i, j, m[i][j]);
  return out;
}

// Rows scaled to unit norm exactly, without the epsilon of l2_normalize_rows.
Tensor unit_rows(const Tensor& z) {
  const std::size_t n = z.shape()[0], d = z.shape()[1];
  std::vector<double> out(z.values());
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) s += out[i * d + k] * out[i * d + k];
    for (std::size_t k = 0; k < d; ++k) out[i * d + k] /= std::sqrt(s);
  }
  return Tensor(z.shape(), std::move(out));
}

LossReport normalized_loss(const Tensor& z, const PairMask& mask, double tau) {
  ad::Graph g;
  return pcl_loss(g.constant(unit_rows(z)), mask, LossConfig{tau}).report;
}

}  // namespace

TEST_CASE("cosine similarity examples") {
  ad::Graph g;
  auto eye = cosine_sim_matrix(g.constant(Tensor::matrix({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}))).value();
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(eye.at(i, j) - (i == j ? 1.0 : 0.0)) < 1e-9);
  auto anti = cosine_sim_matrix(g.constant(Tensor::matrix({{0.3, -0.4}, {-0.3, 0.4}}))).value();
  CHECK(std::abs(anti.at(0, 1) + 1.0) < 1e-9);
  auto half = cosine_sim_matrix(g.constant(Tensor::matrix({{1, 0}, {1, 1}}))).value();
  CHECK(std::abs(half.at(0, 1) - 1.0 / std::sqrt(2.0)) < 1e-9);
  CHECK(half.at(0, 1) == doctest::Approx(0.70711).epsilon(1e-5));
  CHECK_THROWS_AS(cosine_sim_matrix(g.constant(Tensor::matrix({{0, 0}, {1, 1}}))), DomainError);

  Rng rng(3);
  auto z = oracle::gaussian_rows(7, 5, rng);
  auto s = cosine_sim_matrix(g.constant(to_tensor(z))).value();
  for (std::size_t i = 0; i < 7; ++i) {
    CHECK(std::abs(s.at(i, i) - 1.0) < 1e-9);
    for (std::size_t j = 0; j < 7; ++j) {
      CHECK(s.at(i, j) == s.at(j, i));
      CHECK(std::abs(s.at(i, j) - oracle::cosine(z[i], z[j])) < 1e-9);
    }
  }
}

TEST_CASE("two mutual positives give zero loss") {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    auto z = oracle::gaussian_rows(2, 1 + rng.below(8), rng);
    auto r = normalized_loss(to_tensor(z), build_simclr_mask(1), rng.uniform(0.05, 2));
    CHECK(std::abs(r.total) <= 1e-12);
  }
}

TEST_CASE("identical rows, all positive") {
  PairMask all(8);
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = i + 1; j < 8; ++j) all.set(i, j, true);
  auto z = Tensor::filled({8, 4}, 0.5);
  for (double tau : {0.05, 0.1, 1.0}) {
    auto r = normalized_loss(z, all, tau);
    CHECK(std::abs(r.total - 8.0 * std::log(7.0)) < 1e-9);
  }
}

TEST_CASE("vectorized loss matches the scalar transcription") {
  Rng rng(5);
  const double taus[] = {0.05, 0.1, 1.0};
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 * (2 + rng.below(15));
    const std::size_t d = 4 + rng.below(61);
    const double tau = taus[rng.below(3)];
    auto z = oracle::gaussian_rows(n, d, rng);
    auto m = oracle::random_symmetric_mask(n, rng.uniform(0.02, 0.6), rng);
    auto expected = oracle::contrastive_loss(z, m, tau);
    auto got = normalized_loss(to_tensor(z), to_mask(m), tau);
    CHECK(std::abs(got.total - expected.total) < 1e-10);
    CHECK(got.skipped_count == expected.skipped);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(got.per_sample[i] - expected.per_sample[i]) < 1e-10);
    CHECK(std::abs(std::accumulate(got.per_sample.begin(), got.per_sample.end(), 0.0) - got.total) < 1e-10);
  }
}

TEST_CASE("rows without positives are skipped") {
  PairMask m(4);
  m.set(0, 1, true);
  Rng rng(6);
  auto z = oracle::gaussian_rows(4, 3, rng);
  auto r = normalized_loss(to_tensor(z), m, 0.1);
  CHECK(r.skipped_count == 2);
  CHECK(r.per_sample[2] == 0.0);
  CHECK(r.per_sample[3] == 0.0);
  CHECK(normalized_loss(to_tensor(z), PairMask(4), 0.1).total == 0.0);
}

TEST_CASE("loss errors") {
  ad::Graph g;
  auto z = ad::l2_normalize_rows(g.constant(Tensor::matrix({{1, 0}, {0, 1}, {1, 1}}))).rows;
  CHECK_THROWS_AS(pcl_loss(z, PairMask(4), LossConfig{}), DimensionError);
  CHECK_THROWS_AS(pcl_loss(z, PairMask(3), LossConfig{0.0}), ConfigError);
  CHECK_THROWS_AS(pcl_loss_value(Tensor::matrix({{1, 0}, {0, 1}}), PairMask(3), LossConfig{}), DimensionError);
}

TEST_CASE("loss gradient through normalization") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 * (2 + rng.below(4)), d = 3 + rng.below(6);
    auto m = to_mask(oracle::random_symmetric_mask(n, 0.4, rng));
    const double tau = rng.uniform(0.1, 1.0);
    auto program = [&](ad::Graph&, const ad::Var& v) {
      return pcl_loss(ad::l2_normalize_rows(v).rows, m, LossConfig{tau}).loss;
    };
    CHECK(ad::grad_check(program, to_tensor(oracle::gaussian_rows(n, d, rng)), 1e-6) < 1e-5);
  }
}

TEST_CASE("raising a positive similarity lowers the term while its weight is below 1/|P|") {
  // dL_i/ds_ij = (p_ij - 1/|P_i|) / tau, with p_ij the softmax weight over k != i.
  Rng rng(8);
  int checked = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 6 + 2 * rng.below(6);
    const double tau = 0.1 + rng.uniform();
    auto z = oracle::gaussian_rows(n, 8, rng);
    auto m = oracle::random_symmetric_mask(n, 0.4, rng);
    const std::size_t i = rng.below(n);
    std::vector<std::size_t> pos;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i && m[i][j]) pos.push_back(j);
    if (pos.empty()) continue;
    const std::size_t j = pos[rng.below(pos.size())];
    const double weight = oracle::softmax_weight(z, i, j, tau);
    const double bound = 1.0 / static_cast<double>(pos.size());
    if (std::abs(weight - bound) < 0.05) continue;
    auto moved = z;
    for (std::size_t k = 0; k < 8; ++k) moved[j][k] += 1e-4 * z[i][k] / std::sqrt(oracle::cosine(z[i], z[i]));
    // z_j moved toward z_i: only s_ij changes in row i.
    REQUIRE(oracle::cosine(moved[i], moved[j]) > oracle::cosine(z[i], z[j]));
    const double before = normalized_loss(to_tensor(z), to_mask(m), tau).per_sample[i];
    const double after = normalized_loss(to_tensor(moved), to_mask(m), tau).per_sample[i];
    if (weight < bound) {
      CHECK(after < before);
    } else {
      CHECK(after > before);
    }
    ++checked;
  }
  CHECK(checked > 100);
}

TEST_CASE("row permutation leaves the total unchanged") {
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 4 + 2 * rng.below(8);
    auto z = oracle::gaussian_rows(n, 6, rng);
    auto m = oracle::random_symmetric_mask(n, 0.3, rng);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    oracle::Matrix pz(n);
    oracle::Mask pm(n, std::vector<bool>(n));
    for (std::size_t i = 0; i < n; ++i) {
      pz[i] = z[perm[i]];
      for (std::size_t j = 0; j < n; ++j) pm[i][j] = m[perm[i]][perm[j]];
    }
    const double a = normalized_loss(to_tensor(z), to_mask(m), 0.1).total;
    const double b = normalized_loss(to_tensor(pz), to_mask(pm), 0.1).total;
    CHECK(std::abs(a - b) < 1e-12 * std::max(1.0, std::abs(a)));
  }
}

TEST_CASE("loss is finite across temperatures") {
  Rng rng(10);
  for (double tau : {1e-3, 3e-3, 0.01, 0.1, 1.0, 10.0}) {
    auto z = oracle::gaussian_rows(16, 8, rng);
    auto m = oracle::random_symmetric_mask(16, 0.3, rng);
    auto r = normalized_loss(to_tensor(z), to_mask(m), tau);
    CHECK(std::isfinite(r.total));
  }
}

TEST_CASE("forward-only evaluation agrees with the graph") {
  Rng rng(11);
  auto z = oracle::gaussian_rows(10, 5, rng);
  auto m = to_mask(oracle::random_symmetric_mask(10, 0.3, rng));
  ad::Graph g;
  auto unit = ad::l2_normalize_rows(g.constant(to_tensor(z))).rows;
  auto a = pcl_loss(unit, m, LossConfig{}).report;
  auto b = pcl_loss_value(unit.value(), m, LossConfig{});
  CHECK(a.total == b.total);
  CHECK(a.per_sample == b.per_sample);
}
