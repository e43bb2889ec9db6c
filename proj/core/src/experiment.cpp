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

#include "poscl/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <functional>
#include <set>
#include <thread>

#include "poscl/errors.hpp"
#include "poscl/volume_io.hpp"

namespace poscl {

void ExperimentSpec::validate() const {
  if (strategies.empty()) throw ConfigError("experiment: no strategies");
  for (const auto& s : strategies)
    if (s != kRandomInit) parse_strategy(s);
  if (m_list.empty()) throw ConfigError("experiment: empty M list");
  for (auto m : m_list)
    if (m < 1) throw ConfigError("experiment: M must be at least 1");
  if (folds < 2) throw ConfigError("experiment: need at least 2 folds");
  if (seeds.empty()) throw ConfigError("experiment: no seeds");
  if (!(t_true > 0.0 && t_true < 1.0)) throw ConfigError("experiment: t_true must lie in (0, 1)");
  pretrain.validate();
  finetune.validate();
}

const SummaryRecord& ExperimentReport::summary(const std::string& strategy, std::size_t m) const {
  for (const auto& s : summaries)
    if (s.strategy == strategy && s.m == m) return s;
  throw ContractError("report has no summary for " + strategy + " at M=" + std::to_string(m));
}

double ExperimentReport::seed_mean(const std::string& strategy, std::size_t m, std::uint64_t seed) const {
  double acc = 0.0;
  std::size_t n = 0;
  for (const auto& r : runs) {
    if (r.strategy == strategy && r.m == m && r.seed == seed) {
      acc += r.mean_dice;
      ++n;
    }
  }
  if (n == 0) throw ContractError("report has no runs for " + strategy);
  return acc / static_cast<double>(n);
}

std::vector<std::vector<std::size_t>> kfold_split(std::size_t count, std::size_t k) {
  if (k < 1 || k > count) {
    throw ConfigError("kfold: cannot split " + std::to_string(count) + " volumes into " + std::to_string(k) + " folds");
  }
  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t next = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = count / k + (f < count % k ? 1 : 0);
    for (std::size_t i = 0; i < size; ++i) folds[f].push_back(next++);
  }
  return folds;
}

namespace {

/// Runs jobs on up to `threads` workers; results land by index so output order
/// never depends on scheduling. The first failure is rethrown after joining.
void run_parallel(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& job) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        job(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<std::size_t> sample_training_volumes(std::span<const std::size_t> candidates, std::size_t m,
                                                 std::uint64_t seed) {
  if (m > candidates.size()) {
    throw ConfigError("experiment: M=" + std::to_string(m) + " exceeds the " + std::to_string(candidates.size()) +
                      " labeled volumes outside the test fold");
  }
  std::vector<std::size_t> pool(candidates.begin(), candidates.end());
  Rng rng(seed);
  for (std::size_t i = 0; i < m; ++i) std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
  pool.resize(m);
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::string single_family(std::span<const Volume> volumes, const char* what) {
  std::set<std::string> fams;
  for (const auto& v : volumes) fams.insert(v.family_id());
  if (fams.empty()) throw ConfigError(std::string("experiment: no ") + what + " volumes");
  std::string out;
  for (const auto& f : fams) out += (out.empty() ? "" : "+") + f;
  return out;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentSpec& spec, std::span<const Volume> pretrain_pool,
                                std::span<const Volume> labeled) {
  spec.validate();
  const auto started = std::chrono::steady_clock::now();
  ExperimentReport report;
  report.pretrain_family = single_family(pretrain_pool, "pretraining");
  report.finetune_family = single_family(labeled, "labeled");
  report.transfer = spec.pretrain_manifest.has_value() || report.pretrain_family != report.finetune_family;
  if (report.transfer) {
    for (const auto& p : pretrain_pool)
      for (const auto& l : labeled)
        if (p.family_id() == l.family_id()) {
          throw ConfigError("transfer experiment: pretraining and fine-tuning share family '" + p.family_id() + "'");
        }
  }
  for (const auto& v : labeled) report.num_classes = std::max(report.num_classes, v.num_classes());
  report.folds = kfold_split(labeled.size(), spec.folds);
  report.config_json = experiment_spec_json(spec);
  for (const auto& fold : report.folds) {
    for (auto m : spec.m_list) {
      if (m > labeled.size() - fold.size()) {
        throw ConfigError("experiment: M=" + std::to_string(m) + " exceeds the " +
                          std::to_string(labeled.size() - fold.size()) + " volumes outside a test fold");
      }
    }
  }

  // Stage 1: one pretrained checkpoint per (strategy, seed), shared by every fold.
  struct PretrainJob {
    std::string strategy;
    std::uint64_t seed;
  };
  std::vector<PretrainJob> pjobs;
  for (const auto& s : spec.strategies)
    if (s != kRandomInit)
      for (auto seed : spec.seeds) pjobs.push_back({s, seed});
  std::vector<PretrainResult> presults(pjobs.size());
  run_parallel(pjobs.size(), spec.threads, [&](std::size_t i) {
    PretrainConfig cfg = spec.pretrain;
    cfg.pairing.strategy = parse_strategy(pjobs[i].strategy);
    cfg.seed = pjobs[i].seed;
    cfg.t_true = spec.t_true;
    presults[i] = pretrain(pretrain_pool, cfg);
  });
  auto checkpoint_for = [&](const std::string& strategy, std::uint64_t seed) -> const Checkpoint* {
    for (std::size_t i = 0; i < pjobs.size(); ++i)
      if (pjobs[i].strategy == strategy && pjobs[i].seed == seed) return &presults[i].checkpoint;
    return nullptr;
  };
  for (std::size_t i = 0; i < pjobs.size(); ++i) {
    report.pretraining.push_back(
        {pjobs[i].strategy, pjobs[i].seed, presults[i].loss_history, presults[i].false_negatives});
    report.pretrain_label_reads += presults[i].label_reads;
  }

  // Stage 2: fine-tune and evaluate every (strategy, M, fold, seed).
  for (const auto& s : spec.strategies)
    for (auto m : spec.m_list)
      for (std::size_t f = 0; f < report.folds.size(); ++f)
        for (auto seed : spec.seeds) report.runs.push_back({s, m, f, seed, {}, 0.0, 0.0, 0.0});

  run_parallel(report.runs.size(), spec.threads, [&](std::size_t i) {
    RunRecord& run = report.runs[i];
    const auto& test_idx = report.folds[run.fold];
    std::vector<std::size_t> candidates;
    for (std::size_t v = 0; v < labeled.size(); ++v)
      if (std::find(test_idx.begin(), test_idx.end(), v) == test_idx.end()) candidates.push_back(v);
    // Same training volumes and decoder init for every strategy at a given (M, fold, seed).
    const std::uint64_t run_seed = Rng::derive(Rng::derive(run.seed, run.fold), run.m);
    std::vector<Volume> train, test;
    for (auto v : sample_training_volumes(candidates, run.m, run_seed)) train.push_back(labeled[v]);
    for (auto v : test_idx) test.push_back(labeled[v]);

    FinetuneConfig cfg = spec.finetune;
    cfg.m = run.m;
    cfg.seed = run_seed;
    const Checkpoint* init = run.strategy == kRandomInit ? nullptr : checkpoint_for(run.strategy, run.seed);
    const FinetuneResult trained = finetune(init, train, cfg);
    const DiceScore score = evaluate_dice(trained.params, trained.config, test, cfg.preprocess);
    run.class_dice = score.per_class;
    run.mean_dice = score.mean;
    run.finetune_initial_loss = trained.initial_loss;
    run.finetune_final_loss = trained.final_loss;
  });

  for (const auto& s : spec.strategies) {
    for (auto m : spec.m_list) {
      SummaryRecord sum{s, m, {}, {}};
      std::vector<double> overall;
      std::vector<std::vector<double>> per_class(report.num_classes - 1);
      for (const auto& r : report.runs) {
        if (r.strategy != s || r.m != m) continue;
        overall.push_back(r.mean_dice);
        for (std::size_t c = 0; c < r.class_dice.size(); ++c) per_class[c].push_back(r.class_dice[c]);
      }
      sum.overall = mean_std(overall);
      for (const auto& pc : per_class) sum.per_class.push_back(mean_std(pc));
      report.summaries.push_back(std::move(sum));
    }
  }
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

ExperimentReport run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const DatasetManifest manifest = load_manifest(spec.manifest);
  const std::vector<Volume> labeled = load_volumes(manifest, manifest.with_split(Split::kLabeled));
  std::vector<Volume> pretrain_pool;
  if (spec.pretrain_manifest) {
    const DatasetManifest pm = load_manifest(*spec.pretrain_manifest);
    pretrain_pool = load_volumes(pm, pm.entries);
  } else {
    auto entries = manifest.with_split(Split::kPretrain);
    const auto lab = manifest.with_split(Split::kLabeled);
    entries.insert(entries.end(), lab.begin(), lab.end());
    pretrain_pool = load_volumes(manifest, entries);
  }
  return run_experiment(spec, pretrain_pool, labeled);
}

}  // namespace poscl
