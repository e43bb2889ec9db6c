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
#include <filesystem>

#include "poscl/errors.hpp"
#include "poscl/model.hpp"
#include "poscl/pcl_loss.hpp"
#include "poscl/rng.hpp"

using namespace poscl;

namespace {

EncoderConfig small_config() {
  EncoderConfig cfg;
  cfg.input_h = 4;
  cfg.input_w = 3;
  cfg.hidden_dims = {7, 6};
  cfg.repr_dim = 5;
  cfg.proj_dim = 4;
  cfg.num_classes = 3;
  return cfg;
}

Tensor random_images(std::size_t b, const EncoderConfig& cfg, Rng& rng) {
  std::vector<double> v(b * cfg.input_size());
  for (auto& x : v) x = rng.uniform();
  return Tensor({b, cfg.input_h, cfg.input_w}, std::move(v));
}

void jitter_params(Params& p, Rng& rng) {
  for (auto& [name, t] : p.entries())
    for (auto& x : t.data()) x += rng.uniform(-0.3, 0.3);
}

}  // namespace

TEST_CASE("init_params") {
  EncoderConfig cfg;
  auto a = init_params(cfg, 3);
  CHECK(a == init_params(cfg, 3));
  CHECK_FALSE(a == init_params(cfg, 4));
  CHECK(a.init_seed == 3);
  for (const auto& [name, t] : a.entries()) {
    if (name.ends_with(".bias")) {
      for (auto x : t.values()) CHECK(x == 0.0);
    } else {
      REQUIRE(t.rank() == 2);
      const double bound = std::sqrt(6.0 / static_cast<double>(t.shape()[0] + t.shape()[1]));
      double biggest = 0.0;
      for (auto x : t.values()) biggest = std::max(biggest, std::abs(x));
      CHECK(biggest <= bound);
      CHECK(biggest > 0.9 * bound);
    }
  }
  CHECK(a.at("encoder.0.weight").shape() == Shape{256, 256});
  CHECK(a.at("decoder.weight").shape() == Shape{64, 4 * 256});
  CHECK(group_of("projection.1.bias") == ParamGroup::kProjection);
  CHECK_THROWS_AS(group_of("head.weight"), ContractError);
  EncoderConfig bad = cfg;
  bad.hidden_dims = {0};
  CHECK_THROWS_AS(init_params(bad, 1), ConfigError);
}

TEST_CASE("encode shapes and normalization") {
  auto cfg = small_config();
  Rng rng(1);
  auto params = init_params(cfg, 1);
  jitter_params(params, rng);
  auto images = random_images(6, cfg, rng);
  // rows 0 and 3 identical
  for (std::size_t k = 0; k < cfg.input_size(); ++k) images[3 * cfg.input_size() + k] = images[k];
  ad::Graph g;
  BoundParams p(g, params);
  auto e = encode(p, cfg, g.constant(images));
  CHECK(e.repr.shape() == Shape{6, 5});
  CHECK(e.embedding.shape() == Shape{6, 4});
  const auto& z = e.embedding.value();
  for (std::size_t i = 0; i < 6; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < 4; ++k) s += z.at(i, k) * z.at(i, k);
    CHECK(std::abs(std::sqrt(s) - 1.0) < 1e-9);
  }
  for (std::size_t k = 0; k < 4; ++k) CHECK(z.at(0, k) == z.at(3, k));
  CHECK_THROWS_AS(encode(p, cfg, g.constant(Tensor::zeros({2, 5, 3}))), DimensionError);
}

TEST_CASE("segment shape and encoder connectivity") {
  auto cfg = small_config();
  Rng rng(2);
  auto params = init_params(cfg, 2);
  ad::Graph g;
  BoundParams p(g, params);
  auto logits = segment(p, cfg, g.constant(random_images(2, cfg, rng)));
  CHECK(logits.shape() == Shape{2, 3, 4, 3});
  std::vector<std::size_t> labels(2 * 12);
  for (auto& l : labels) l = rng.below(3);
  auto grads = p.named_gradients(g.backward(ad::softmax_cross_entropy(logits, labels)));
  double total = 0.0;
  for (auto x : grads.at("encoder.0.weight").values()) total += std::abs(x);
  CHECK(total > 0.0);
  for (auto x : grads.at("projection.0.weight").values()) CHECK(x == 0.0);
}

TEST_CASE("segment ignores the projection head") {
  auto cfg = small_config();
  Rng rng(3);
  auto params = init_params(cfg, 3);
  auto images = random_images(3, cfg, rng);
  auto perturbed = params;
  for (auto& [name, t] : perturbed.entries())
    if (group_of(name) == ParamGroup::kProjection)
      for (auto& x : t.data()) x += rng.uniform(-1, 1);
  CHECK(predict_labels(params, cfg, images) == predict_labels(perturbed, cfg, images));
  ad::Graph g1, g2;
  auto a = segment(BoundParams(g1, params), cfg, g1.constant(images)).value();
  auto b = segment(BoundParams(g2, perturbed), cfg, g2.constant(images)).value();
  CHECK(a == b);
}

TEST_CASE("frozen groups enter as constants") {
  auto cfg = small_config();
  Rng rng(4);
  auto params = init_params(cfg, 4);
  ad::Graph g;
  BoundParams p(g, params, {ParamGroup::kDecoder});
  auto logits = segment(p, cfg, g.constant(random_images(2, cfg, rng)));
  std::vector<std::size_t> labels(24, 1);
  auto grads = p.named_gradients(g.backward(ad::softmax_cross_entropy(logits, labels)));
  CHECK(grads.size() == 2);
  CHECK(grads.count("decoder.weight") == 1);
}

TEST_CASE("weight gradients match finite differences") {
  auto cfg = small_config();
  Rng rng(5);
  auto params = init_params(cfg, 5);
  jitter_params(params, rng);
  auto images = random_images(4, cfg, rng);
  std::vector<std::size_t> labels(4 * 12);
  for (auto& l : labels) l = rng.below(3);
  auto mask = build_position_mask(std::vector<double>{0.1, 0.1, 0.5, 0.55}, 0.1);

  auto seg_loss = [&](const Params& ps, std::map<std::string, Tensor>* grads) {
    ad::Graph g;
    BoundParams p(g, ps);
    auto loss = ad::softmax_cross_entropy(segment(p, cfg, g.constant(images)), labels);
    if (grads) *grads = p.named_gradients(g.backward(loss));
    return loss.value().item();
  };
  auto con_loss = [&](const Params& ps, std::map<std::string, Tensor>* grads) {
    ad::Graph g;
    BoundParams p(g, ps);
    auto loss = pcl_loss(encode(p, cfg, g.constant(images)).embedding, mask, LossConfig{0.5}).loss;
    if (grads) *grads = p.named_gradients(g.backward(loss));
    return loss.value().item();
  };
  for (int which = 0; which < 2; ++which) {
    auto eval = [&](const Params& ps, std::map<std::string, Tensor>* grads) {
      return which == 0 ? seg_loss(ps, grads) : con_loss(ps, grads);
    };
    std::map<std::string, Tensor> analytic;
    eval(params, &analytic);
    double worst = 0.0;
    for (const auto& [name, t] : params.entries()) {
      if (which == 0 && group_of(name) == ParamGroup::kProjection) continue;
      if (which == 1 && group_of(name) == ParamGroup::kDecoder) continue;
      for (std::size_t k = 0; k < t.size(); ++k) {
        const double eps = 1e-6;
        auto plus = params, minus = params;
        plus.at(name)[k] += eps;
        minus.at(name)[k] -= eps;
        const double fd = (eval(plus, nullptr) - eval(minus, nullptr)) / (2 * eps);
        worst = std::max(worst, std::abs(analytic.at(name)[k] - fd) / std::max(1.0, std::abs(fd)));
      }
    }
    CAPTURE(which);
    CHECK(worst < 1e-5);
  }
}

TEST_CASE("checkpoint round trip") {
  Checkpoint c;
  c.config = EncoderConfig{};
  c.params = init_params(c.config, 9);
  Rng rng(9);
  jitter_params(c.params, rng);
  c.provenance = {"pretrain", "pcl", 0.1, 4, 0.1, 9, 30, 16, 0.1, "none"};
  auto bytes = encode_checkpoint(c);
  auto back = decode_checkpoint(bytes);
  CHECK(back == c);
  CHECK(back.params.init_seed == c.params.init_seed);
  CHECK(encode_checkpoint(back) == bytes);

  auto path = std::filesystem::temp_directory_path() / "poscl_model_test.ckpt";
  save_checkpoint(path, c);
  auto loaded = load_checkpoint(path);
  CHECK(loaded == c);
  auto images = random_images(3, c.config, rng);
  ad::Graph g1, g2;
  auto a = encode(BoundParams(g1, c.params), c.config, g1.constant(images)).embedding.value();
  auto b = encode(BoundParams(g2, loaded.params), loaded.config, g2.constant(images)).embedding.value();
  CHECK(a == b);

  CHECK_THROWS_AS(decode_checkpoint(bytes.substr(0, bytes.size() - 3)), FormatError);
  CHECK_THROWS_AS(decode_checkpoint("{}\n"), FormatError);
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/x.ckpt"), Error);
}
