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

#include <algorithm>
#include <cmath>
#include <numeric>

#include "poscl/errors.hpp"
#include "poscl/pairing.hpp"
#include "poscl/rng.hpp"

using namespace poscl;

namespace {

std::vector<double> twin_positions(std::size_t n_sources, Rng& rng) {
  std::vector<double> p;
  for (std::size_t i = 0; i < n_sources; ++i) {
    const double pos = static_cast<double>(rng.below(24)) / 24.0;
    p.push_back(pos);
    p.push_back(pos);
  }
  return p;
}

void check_exact(const PairMask& m, const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  PairMask expected(m.size());
  for (auto [i, j] : pairs) expected.set(i, j, true);
  CHECK(m == expected);
}

}  // namespace

TEST_CASE("pair mask contract") {
  PairMask m(3);
  CHECK_THROWS_AS(m.set(1, 1, true), ContractError);
  CHECK_THROWS_AS(m.set(0, 3, true), RangeError);
  m.set(0, 2, true);
  CHECK(m.positive(2, 0));
  CHECK(m.row_count(0) == 1);
  CHECK(m.total_positive() == 2);
  CHECK(m.as_tensor() == Tensor::matrix({{0, 0, 1}, {0, 0, 0}, {1, 0, 0}}));
}

TEST_CASE("position mask examples") {
  const std::vector<double> p = {0.10, 0.10, 0.12, 0.12, 0.50, 0.50};
  check_exact(build_position_mask(p, 0.1), {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}, {4, 5}});

  const std::vector<double> chain = {0.0, 0.08, 0.16};
  auto m = build_position_mask(chain, 0.1);
  CHECK(m.positive(0, 1));
  CHECK(m.positive(1, 2));
  CHECK_FALSE(m.positive(0, 2));

  auto all = build_position_mask(chain, 0.5);
  CHECK(all.total_positive() == 6);

  CHECK_THROWS_AS(build_position_mask(chain, 0.0), ConfigError);
  CHECK_THROWS_AS(build_position_mask(chain, 1.0), ConfigError);
  const std::vector<double> outside = {0.0, 1.0};
  CHECK_THROWS_AS(build_position_mask(outside, 0.1), RangeError);
}

TEST_CASE("threshold ties are negative") {
  const std::vector<double> p = {0.2, 0.3, 0.5, 0.6};
  auto m = build_position_mask(p, 0.1);
  CHECK_FALSE(m.positive(0, 1));  // 0.3 - 0.2 is not exactly 0.1 in binary
  CHECK_FALSE(m.positive(2, 3));
  CHECK(within_threshold(0.2, 0.3, 0.1000001));
  CHECK_FALSE(within_threshold(0.25, 0.5, 0.25));
  for (std::size_t n = 2; n <= 40; ++n) {
    for (std::size_t k = 1; k < n; ++k) {
      const double t = static_cast<double>(k) / static_cast<double>(n);
      for (std::size_t a = 0; a + k < n; ++a) {
        CHECK_FALSE(within_threshold(static_cast<double>(a) / n, static_cast<double>(a + k) / n, t));
      }
    }
  }
}

TEST_CASE("simclr mask") {
  check_exact(build_simclr_mask(2), {{0, 1}, {2, 3}});
  auto m = build_simclr_mask(5);
  for (std::size_t i = 0; i < m.size(); ++i) CHECK(m.row_count(i) == 1);
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    auto p = twin_positions(1, rng);
    CHECK(build_simclr_mask(1) == build_position_mask(p, rng.uniform(0.01, 0.99)));
  }
  CHECK_THROWS_AS(build_simclr_mask(0), ContractError);
}

TEST_CASE("gcl mask examples") {
  CHECK(gcl_partition(0.24, 4) == 0);
  CHECK(gcl_partition(0.26, 4) == 1);
  CHECK(gcl_partition(0.999, 4) == 3);
  CHECK(gcl_partition(0.75, 4) == 3);
  const std::vector<double> boundary = {0.24, 0.26};
  CHECK_FALSE(build_gcl_mask(boundary, 4).positive(0, 1));
  const std::vector<double> same = {0.1, 0.2};
  CHECK(build_gcl_mask(same, 4).positive(0, 1));
  const std::vector<double> spread = {0.0, 0.3, 0.6, 0.9};
  CHECK(build_gcl_mask(spread, 1).total_positive() == 12);
  CHECK_THROWS_AS(build_gcl_mask(spread, 0), ConfigError);
  // Index-block partitions and position partitions agree when n is a multiple of S.
  for (std::size_t m = 0; m < 24; ++m) CHECK(gcl_partition(m / 24.0, 4) == m / 6);
}

TEST_CASE("masks are symmetric, irreflexive and keep twins positive") {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(16);
    auto p = twin_positions(n, rng);
    const double t = rng.uniform(1e-6, 0.999);
    for (const auto& m : {build_position_mask(p, t), build_gcl_mask(p, 1 + rng.below(8)), build_simclr_mask(n)}) {
      CHECK(m.is_symmetric());
      CHECK(m.is_irreflexive());
      for (std::size_t i = 0; i < n; ++i) CHECK(m.positive(2 * i, 2 * i + 1));
    }
  }
}

TEST_CASE("position mask grows with the threshold") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> p(2 + rng.below(30));
    for (auto& x : p) x = rng.uniform();
    double t1 = rng.uniform(0.001, 0.999), t2 = rng.uniform(0.001, 0.999);
    if (t1 > t2) std::swap(t1, t2);
    CHECK(build_position_mask(p, t1).subset_of(build_position_mask(p, t2)));
  }
}

TEST_CASE("masks permute with the batch") {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    auto p = twin_positions(1 + rng.below(10), rng);
    std::vector<std::size_t> perm(p.size());
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    std::vector<double> q(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) q[i] = p[perm[i]];
    auto a = build_position_mask(p, 0.1), b = build_position_mask(q, 0.1);
    auto ga = build_gcl_mask(p, 4), gb = build_gcl_mask(q, 4);
    for (std::size_t i = 0; i < p.size(); ++i) {
      for (std::size_t j = 0; j < p.size(); ++j) {
        CHECK(b.positive(i, j) == a.positive(perm[i], perm[j]));
        CHECK(gb.positive(i, j) == ga.positive(perm[i], perm[j]));
      }
    }
  }
}

TEST_CASE("build_mask dispatch and config") {
  const std::vector<double> p = {0.1, 0.1, 0.15, 0.15};
  CHECK(build_mask(PairingConfig::pcl(0.1), p) == build_position_mask(p, 0.1));
  CHECK(build_mask(PairingConfig::gcl(4), p) == build_gcl_mask(p, 4));
  CHECK(build_mask(PairingConfig::simclr(), p) == build_simclr_mask(2));
  const std::vector<double> odd = {0.1, 0.1, 0.2};
  CHECK_THROWS_AS(build_mask(PairingConfig::simclr(), odd), DimensionError);
  CHECK(parse_strategy("pcl") == Strategy::kPcl);
  CHECK(parse_strategy(to_string(Strategy::kGcl)) == Strategy::kGcl);
  CHECK_THROWS_AS(parse_strategy("byol"), ConfigError);
}

TEST_CASE("false negative stats") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    auto p = twin_positions(2 + rng.below(10), rng);
    auto s = false_negative_stats(build_position_mask(p, 0.1), p, 0.1);
    CHECK(s.false_neg_count == 0);
    CHECK(s.false_pos_count == 0);
    CHECK(s.pair_count == p.size() * (p.size() - 1));
  }
  const std::vector<double> p = {0.10, 0.10, 0.12, 0.12};
  auto s = false_negative_stats(build_simclr_mask(2), p, 0.1);
  CHECK(s.false_neg_count == 8);
  CHECK(s.false_neg_rate == doctest::Approx(8.0 / 12.0));
  CHECK_THROWS_AS(false_negative_stats(build_simclr_mask(2), p, 0.0), ConfigError);
}

TEST_CASE("false negatives order pcl < gcl < simclr by enumeration") {
  std::vector<double> p;
  for (int v = 0; v < 2; ++v) {
    for (int m = 0; m < 20; ++m) {
      p.push_back(m / 20.0);
      p.push_back(m / 20.0);
    }
  }
  // Brute-force oracle with its own similarity and partition rules.
  auto count_fn = [&](auto positive) {
    std::size_t fn = 0;
    for (std::size_t i = 0; i < p.size(); ++i)
      for (std::size_t j = 0; j < p.size(); ++j)
        if (i != j && std::abs(p[i] - p[j]) < 0.1 - 1e-12 && !positive(i, j)) ++fn;
    return fn;
  };
  const auto fn_pcl = count_fn([&](std::size_t i, std::size_t j) { return std::abs(p[i] - p[j]) < 0.1 - 1e-12; });
  const auto fn_gcl = count_fn([&](std::size_t i, std::size_t j) {
    return std::floor(p[i] * 4 + 1e-12) == std::floor(p[j] * 4 + 1e-12);
  });
  const auto fn_simclr = count_fn([&](std::size_t i, std::size_t j) { return i / 2 == j / 2; });
  CHECK(fn_pcl == 0);
  CHECK(fn_pcl < fn_gcl);
  CHECK(fn_gcl < fn_simclr);

  CHECK(false_negative_stats(build_position_mask(p, 0.1), p, 0.1).false_neg_count == fn_pcl);
  CHECK(false_negative_stats(build_gcl_mask(p, 4), p, 0.1).false_neg_count == fn_gcl);
  CHECK(false_negative_stats(build_simclr_mask(40), p, 0.1).false_neg_count == fn_simclr);
}
