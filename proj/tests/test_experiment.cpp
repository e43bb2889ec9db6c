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
#include <filesystem>
#include <set>
#include <sstream>

#include "json.hpp"
#include "poscl/errors.hpp"
#include "poscl/experiment.hpp"
#include "poscl/volume_io.hpp"

using namespace poscl;

namespace {

std::vector<Volume> make_family(const FamilySpec& fam, std::size_t count, std::uint64_t first = 500) {
  std::vector<Volume> out;
  for (std::size_t i = 0; i < count; ++i)
    out.push_back(generate_synthetic_volume(fam, first + i, fam.family_id + "-" + std::to_string(i)));
  return out;
}

ExperimentSpec tiny_spec() {
  ExperimentSpec spec;
  spec.strategies = {kRandomInit, "pcl", "simclr"};
  spec.m_list = {1, 2};
  spec.folds = 3;
  spec.seeds = {0, 1};
  spec.pretrain.epochs = 1;
  spec.pretrain.steps_per_epoch = 2;
  spec.pretrain.batch = 4;
  spec.finetune.epochs = 2;
  spec.threads = 2;
  return spec;
}

}  // namespace

TEST_CASE("kfold examples") {
  auto folds = kfold_split(10, 5);
  REQUIRE(folds.size() == 5);
  for (std::size_t f = 0; f < 5; ++f) CHECK(folds[f] == std::vector<std::size_t>{2 * f, 2 * f + 1});
  CHECK_THROWS_AS(kfold_split(3, 4), ConfigError);
  CHECK_THROWS_AS(kfold_split(3, 0), ConfigError);
}

TEST_CASE("folds are disjoint and cover every volume") {
  for (std::size_t count = 2; count <= 25; ++count) {
    for (std::size_t k = 2; k <= count; ++k) {
      auto folds = kfold_split(count, k);
      REQUIRE(folds.size() == k);
      std::vector<std::size_t> all;
      std::size_t smallest = count, largest = 0;
      for (const auto& f : folds) {
        all.insert(all.end(), f.begin(), f.end());
        smallest = std::min(smallest, f.size());
        largest = std::max(largest, f.size());
      }
      std::sort(all.begin(), all.end());
      std::vector<std::size_t> expected(count);
      for (std::size_t i = 0; i < count; ++i) expected[i] = i;
      CHECK(all == expected);
      CHECK(largest - smallest <= 1);
    }
  }
}

TEST_CASE("experiment spec json round trip") {
  auto spec = tiny_spec();
  spec.pretrain.pairing.threshold = 0.2;
  spec.finetune.lr = 5e-5;
  auto back = parse_experiment_spec(experiment_spec_json(spec));
  CHECK(experiment_spec_json(back) == experiment_spec_json(spec));
  CHECK(back.strategies == spec.strategies);
  CHECK(back.finetune.lr == 5e-5);
  CHECK_THROWS_AS(parse_experiment_spec("{\"strategies\": [\"byol\"]}"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_spec("{\"folds\": 1}"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_spec("not json"), ConfigError);
}

TEST_CASE("small experiment: determinism, summaries and label firewall") {
  auto vols = make_family(default_family_a(), 6);
  auto spec = tiny_spec();
  auto a = run_experiment(spec, vols, vols);
  auto b = run_experiment(spec, vols, vols);
  CHECK(report_csv(a) == report_csv(b));
  CHECK_FALSE(a.transfer);
  CHECK(a.pretrain_label_reads == 0);
  CHECK(a.runs.size() == 3 * 2 * 3 * 2);
  CHECK(a.pretraining.size() == 2 * 2);

  for (const auto& s : a.summaries) {
    double acc = 0.0;
    std::size_t n = 0;
    for (const auto& r : a.runs)
      if (r.strategy == s.strategy && r.m == s.m) {
        acc += r.mean_dice;
        ++n;
      }
    CHECK(n == 6);
    CHECK(std::abs(s.overall.mean - acc / n) < 1e-12);
    CHECK(s.per_class.size() == 3);
  }
  for (const auto& r : a.runs) {
    CHECK(r.class_dice.size() == 3);
    CHECK(r.mean_dice >= 0.0);
    CHECK(r.mean_dice <= 1.0);
  }

  std::istringstream csv(report_csv(a));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "strategy,M,fold,seed,class,dice");
  std::size_t rows = 0;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == a.runs.size() * 4);

  auto j = nlohmann::json::parse(report_json(a));
  CHECK(j.contains("summaries"));
  CHECK(j.contains("config"));
  CHECK(j["pretrain_label_reads"] == 0);
}

TEST_CASE("every strategy fine-tunes on the same volumes") {
  auto vols = make_family(default_family_a(), 6);
  auto spec = tiny_spec();
  spec.strategies = {kRandomInit, "pcl"};
  spec.m_list = {1};
  auto r = run_experiment(spec, vols, vols);
  // Same training volumes and decoder init, so the random baseline's initial
  // loss depends only on (fold, seed) and differs from the pretrained start.
  for (const auto& x : r.runs) {
    for (const auto& y : r.runs) {
      if (x.fold == y.fold && x.seed == y.seed && x.strategy == y.strategy) {
        CHECK(x.finetune_initial_loss == y.finetune_initial_loss);
      }
    }
  }
}

TEST_CASE("transfer mode") {
  auto a = make_family(default_family_a(), 4);
  auto b = make_family(default_family_b(), 6);
  auto spec = tiny_spec();
  spec.strategies = {kRandomInit, "pcl"};
  spec.m_list = {2};
  spec.seeds = {0};
  spec.pretrain.preprocess.resolution_x = 1.0;
  spec.finetune.preprocess.resolution_x = 1.25;
  spec.finetune.preprocess.resolution_y = 1.25;
  auto r = run_experiment(spec, a, b);
  CHECK(r.transfer);
  CHECK(r.pretrain_family == "A");
  CHECK(r.finetune_family == "B");
  CHECK(r.num_classes == 3);

  spec.pretrain_manifest = "declared.json";
  CHECK_THROWS_AS(run_experiment(spec, b, b), ConfigError);
}

TEST_CASE("infeasible M") {
  auto vols = make_family(default_family_a(), 4);
  auto spec = tiny_spec();
  spec.folds = 2;
  spec.m_list = {3};
  CHECK_THROWS_AS(run_experiment(spec, vols, vols), ConfigError);
}

TEST_CASE("experiment from manifests") {
  auto dir = std::filesystem::temp_directory_path() / "poscl_experiment_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  DatasetManifest m;
  auto vols = make_family(default_family_a(), 6);
  for (std::size_t i = 0; i < vols.size(); ++i) {
    const auto name = "v" + std::to_string(i) + ".vvol";
    write_vvol(dir / name, vols[i]);
    m.entries.push_back({name, "A", i < 2 ? Split::kPretrain : Split::kLabeled});
  }
  save_manifest(dir / "manifest.json", m);
  auto spec = tiny_spec();
  spec.manifest = dir / "manifest.json";
  spec.strategies = {kRandomInit, "gcl"};
  spec.m_list = {1};
  spec.folds = 2;
  spec.seeds = {0};
  auto r = run_experiment(spec);
  CHECK(r.folds.size() == 2);
  CHECK(r.runs.size() == 4);
  std::set<std::size_t> tested;
  for (const auto& f : r.folds) tested.insert(f.begin(), f.end());
  CHECK(tested.size() == 4);
}
