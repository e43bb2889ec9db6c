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


#include <benchmark/benchmark.h>

#include <vector>

#include "poscl/autodiff.hpp"
#include "poscl/pairing.hpp"
#include "poscl/pcl_loss.hpp"
#include "poscl/rng.hpp"
#include "poscl/train.hpp"

using namespace poscl;

namespace {

Tensor random_tensor(Shape shape, std::uint64_t seed) {
  Rng rng(seed);
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  std::vector<double> data(n);
  for (auto& v : data) v = rng.normal();
  return Tensor(std::move(shape), std::move(data));
}

void BM_MatmulBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Tensor a = random_tensor({32, 256}, 1), b = random_tensor({256, n}, 2);
  for (auto _ : state) {
    ad::Graph g;
    auto y = ad::sum(ad::matmul(g.leaf(a), g.leaf(b)));
    benchmark::DoNotOptimize(g.backward(y));
  }
}
BENCHMARK(BM_MatmulBackward)->Arg(64)->Arg(128)->Arg(256);

void BM_PclLoss(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Tensor z = random_tensor({n, 32}, 3);
  std::vector<double> positions;
  for (std::size_t i = 0; i < n / 2; ++i) {
    positions.push_back(static_cast<double>(i % 24) / 24.0);
    positions.push_back(positions.back());
  }
  const PairMask mask = build_position_mask(positions, 0.1);
  for (auto _ : state) {
    ad::Graph g;
    auto zn = ad::l2_normalize_rows(g.leaf(z));
    auto loss = pcl_loss(zn.rows, mask, LossConfig{});
    benchmark::DoNotOptimize(g.backward(loss.loss));
  }
}
BENCHMARK(BM_PclLoss)->Arg(8)->Arg(32)->Arg(64);

void BM_ContrastiveStep(benchmark::State& state) {
  const EncoderConfig cfg;
  Params params = init_params(cfg, 4);
  OptimizerState opt;
  const Tensor images = random_tensor({32, cfg.input_h, cfg.input_w}, 5);
  std::vector<double> positions;
  for (std::size_t i = 0; i < 16; ++i) {
    positions.push_back(static_cast<double>(i) / 16.0);
    positions.push_back(positions.back());
  }
  const PairMask mask = build_position_mask(positions, 0.1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(contrastive_step(params, opt, cfg, images, mask, LossConfig{}, 1e-3));
  }
}
BENCHMARK(BM_ContrastiveStep);

}  // namespace

BENCHMARK_MAIN();
