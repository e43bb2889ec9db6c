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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "poscl/metrics.hpp"
#include "poscl/pairing.hpp"
#include "poscl/train.hpp"
#include "poscl/volume.hpp"

namespace poscl {

/// Label for the no-pretraining baseline in strategy lists.
inline constexpr const char* kRandomInit = "random";

/// A K-fold semi-supervised or transfer comparison.
///
/// Semi-supervised: every volume in `manifest` (labels ignored) feeds
/// pretraining, and the labeled split is cross-validated. Transfer: pretraining
/// uses `pretrain_manifest`, whose family must differ from the labeled family.
struct ExperimentSpec {
  std::filesystem::path manifest;
  std::optional<std::filesystem::path> pretrain_manifest;
  std::vector<std::string> strategies{kRandomInit, "simclr", "gcl", "pcl"};
  std::vector<std::size_t> m_list{2};
  std::size_t folds = 5;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  PretrainConfig pretrain;  // pairing.strategy is overridden per strategy
  FinetuneConfig finetune;  // m and seed are overridden per run
  double t_true = 0.1;
  std::size_t threads = 0;  // 0: one per hardware thread

  void validate() const;
};

ExperimentSpec load_experiment_spec(const std::filesystem::path& path);
ExperimentSpec parse_experiment_spec(const std::string& json_text, const std::filesystem::path& base_dir = {});
std::string experiment_spec_json(const ExperimentSpec& spec);

struct RunRecord {
  std::string strategy;
  std::size_t m = 0;
  std::size_t fold = 0;
  std::uint64_t seed = 0;
  std::vector<double> class_dice;
  double mean_dice = 0.0;
  double finetune_initial_loss = 0.0;
  double finetune_final_loss = 0.0;
};

struct SummaryRecord {
  std::string strategy;
  std::size_t m = 0;
  MeanStd overall;
  std::vector<MeanStd> per_class;
};

struct PretrainRecord {
  std::string strategy;
  std::uint64_t seed = 0;
  std::vector<double> loss_history;
  FalseNegativeStats false_negatives;
};

struct ExperimentReport {
  bool transfer = false;
  std::string pretrain_family;
  std::string finetune_family;
  std::size_t num_classes = 0;
  std::vector<std::vector<std::size_t>> folds;  // test volume indices per fold
  std::vector<RunRecord> runs;
  std::vector<SummaryRecord> summaries;
  std::vector<PretrainRecord> pretraining;
  std::uint64_t pretrain_label_reads = 0;
  double wall_clock_seconds = 0.0;
  std::string config_json;

  const SummaryRecord& summary(const std::string& strategy, std::size_t m) const;
  /// Mean Dice over the runs of one (strategy, M, seed).
  double seed_mean(const std::string& strategy, std::size_t m, std::uint64_t seed) const;
};

/// Contiguous folds over `count` items; sizes differ by at most one.
std::vector<std::vector<std::size_t>> kfold_split(std::size_t count, std::size_t k);

ExperimentReport run_experiment(const ExperimentSpec& spec);
ExperimentReport run_experiment(const ExperimentSpec& spec, std::span<const Volume> pretrain_pool,
                                std::span<const Volume> labeled);

/// Full JSON report, including config echo, loss curves and wall-clock time.
std::string report_json(const ExperimentReport& report);
/// One row per (strategy, M, fold, seed, class) plus a "mean" class row.
/// Deterministic: byte-identical for identical runs.
std::string report_csv(const ExperimentReport& report);

}  // namespace poscl
