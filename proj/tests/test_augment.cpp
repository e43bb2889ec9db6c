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

#include "poscl/augment.hpp"
#include "poscl/errors.hpp"
#include "poscl/rng.hpp"

using namespace poscl;

namespace {

Slice2D random_slice(std::size_t w, std::size_t h, Rng& rng) {
  Slice2D s;
  s.width = w;
  s.height = h;
  s.pixels.resize(w * h);
  for (auto& p : s.pixels) p = rng.uniform(-0.5, 2.0);
  s.position = static_cast<double>(rng.below(24)) / 24.0;
  s.volume_id = "vol-" + std::to_string(rng.below(100));
  s.family_id = "A";
  s.slice_index = rng.below(24);
  s.slice_count = 24;
  return s;
}

}  // namespace

TEST_CASE("config validation") {
  CHECK_NOTHROW(AugConfig{}.validate());
  CHECK_NOTHROW(AugConfig::none().validate());
  CHECK_THROWS_AS((AugConfig{0.6, 0, 1, 1}).validate(), ConfigError);
  CHECK_THROWS_AS((AugConfig{0.1, -1, 1, 1}).validate(), ConfigError);
  CHECK_THROWS_AS((AugConfig{0.1, 5, 1.1, 1.2}).validate(), ConfigError);
  CHECK_THROWS_AS((AugConfig{0.1, 5, 0.8, 0.9}).validate(), ConfigError);
}

TEST_CASE("zero ranges are the identity") {
  Rng data(1), rng(2);
  auto s = random_slice(16, 16, data);
  auto out = random_augment(s, AugConfig::none(), rng);
  CHECK(out.pixels == s.pixels);
}

TEST_CASE("quarter turn of a 2x2 image") {
  Slice2D s;
  s.width = 2;
  s.height = 2;
  s.pixels = {1, 2, 3, 4};  // rows top to bottom
  AffineParams p;
  p.rotate_deg = 90.0;
  auto out = apply_affine(s, p);
  const std::vector<double> expected = {3, 1, 4, 2};  // clockwise as displayed
  for (std::size_t i = 0; i < 4; ++i) CHECK(out.pixels[i] == doctest::Approx(expected[i]).epsilon(1e-12));
}

TEST_CASE("integer translation shifts and zero fills") {
  Slice2D s;
  s.width = 3;
  s.height = 2;
  s.pixels = {1, 2, 3, 4, 5, 6};
  AffineParams p;
  p.translate_x = 1.0;
  auto out = apply_affine(s, p);
  CHECK(out.pixels == std::vector<double>{0, 1, 2, 0, 4, 5});
}

TEST_CASE("augmentation preserves metadata") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    auto s = random_slice(8 + rng.below(9), 8 + rng.below(9), rng);
    s.label = std::vector<std::uint16_t>(s.width * s.height, 1);
    AugConfig cfg{rng.uniform(0, 0.5), rng.uniform(0, 180), rng.uniform(0.5, 1), rng.uniform(1, 2)};
    auto out = random_augment(s, cfg, rng);
    CHECK(out.position == s.position);
    CHECK(out.volume_id == s.volume_id);
    CHECK(out.family_id == s.family_id);
    CHECK(out.slice_index == s.slice_index);
    CHECK(out.slice_count == s.slice_count);
    CHECK(out.width == s.width);
    CHECK(out.height == s.height);
    CHECK_FALSE(out.label.has_value());
  }
}

TEST_CASE("augmented values stay inside the zero-extended input range") {
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    auto s = random_slice(12, 12, rng);
    const auto [mn, mx] = std::minmax_element(s.pixels.begin(), s.pixels.end());
    const double lo = std::min(0.0, *mn), hi = std::max(0.0, *mx);
    AugConfig cfg{0.3, 90, 0.6, 1.5};
    auto out = random_augment(s, cfg, rng);
    for (auto v : out.pixels) {
      CHECK(v >= lo - 1e-12);
      CHECK(v <= hi + 1e-12);
    }
  }
}

TEST_CASE("sampled parameters respect the configured ranges") {
  Rng rng(8);
  Slice2D s;
  s.width = 20;
  s.height = 10;
  s.pixels.assign(200, 1.0);
  AugConfig cfg;
  for (int i = 0; i < 1000; ++i) {
    auto p = sample_affine(s, cfg, rng);
    CHECK(std::abs(p.translate_x) <= 0.1 * 20);
    CHECK(std::abs(p.translate_y) <= 0.1 * 10);
    CHECK(std::abs(p.rotate_deg) <= 15.0);
    CHECK(p.scale >= 0.9);
    CHECK(p.scale <= 1.1);
  }
}

TEST_CASE("contrastive batch interleaves twin views") {
  Rng data(9);
  SliceBatch batch;
  for (int i = 0; i < 3; ++i) batch.push_back(random_slice(8, 8, data));
  Rng a(10), b(10);
  auto out = make_contrastive_batch(batch, AugConfig{}, a);
  REQUIRE(out.size() == 6);
  REQUIRE(out.positions.size() == 6);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(out.positions[2 * i] == batch[i].position);
    CHECK(out.positions[2 * i + 1] == batch[i].position);
    CHECK(out.volume_ids[2 * i] == batch[i].volume_id);
    CHECK(out.volume_ids[2 * i + 1] == batch[i].volume_id);
    CHECK(out.images[2 * i].pixels != out.images[2 * i + 1].pixels);
  }
  auto again = make_contrastive_batch(batch, AugConfig{}, b);
  for (std::size_t i = 0; i < 6; ++i) CHECK(again.images[i].pixels == out.images[i].pixels);
  CHECK_THROWS_AS(make_contrastive_batch(SliceBatch{}, AugConfig{}, a), ContractError);
}
