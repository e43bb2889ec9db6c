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


// poscl: data generation, pretraining, fine-tuning and experiment driver.

#include <malloc.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "poscl/errors.hpp"
#include "poscl/experiment.hpp"
#include "poscl/metrics.hpp"
#include "poscl/pairing.hpp"
#include "poscl/rng.hpp"
#include "poscl/train.hpp"
#include "poscl/volume_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace poscl;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
  if (!out) throw ConfigError("write failed for " + path.string());
}

// REPORT names the JSON file; the CSV goes next to it with a .csv extension.
fs::path csv_path(const fs::path& report) {
  fs::path p = report;
  return p.replace_extension(".csv");
}

std::vector<Volume> volumes_with_split(const DatasetManifest& m, Split s) {
  return load_volumes(m, m.with_split(s));
}

std::vector<Volume> all_volumes(const DatasetManifest& m) { return load_volumes(m, m.entries); }

std::vector<Volume> labeled_volumes(const DatasetManifest& m) {
  auto v = volumes_with_split(m, Split::kLabeled);
  if (v.empty()) throw ConfigError("manifest has no labeled volumes");
  return v;
}

json dice_json(const DiceScore& d) { return {{"per_class", d.per_class}, {"mean", d.mean}}; }

// ---- generate-data ----

struct GenerateArgs {
  std::string family = "A";
  std::size_t volumes = 20;
  std::uint64_t seed = 0;
  std::string out;
};

int run_generate(const GenerateArgs& a) {
  FamilySpec fam;
  if (a.family == "A") {
    fam = default_family_a();
  } else if (a.family == "B") {
    fam = default_family_b();
  } else {
    throw ConfigError("unknown family '" + a.family + "' (expected A or B)");
  }
  if (a.volumes == 0) throw ConfigError("--volumes must be positive");
  const fs::path dir = a.out;
  fs::create_directories(dir);
  DatasetManifest manifest;
  manifest.base_dir = dir;
  for (std::size_t i = 0; i < a.volumes; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "%s%03zu", fam.family_id.c_str(), i);
    const Volume v = generate_synthetic_volume(fam, Rng::derive(a.seed, i), name);
    write_vvol(dir / (std::string(name) + ".vvol"), v);
    manifest.entries.push_back({std::string(name) + ".vvol", fam.family_id, Split::kLabeled});
  }
  save_manifest(dir / "manifest.json", manifest);
  std::cout << "wrote " << a.volumes << " volumes of family " << fam.family_id << " to " << dir.string() << "\n";
  return 0;
}

// ---- pretrain ----

struct PretrainArgs {
  std::string manifest;
  std::string strategy = "pcl";
  double t = 0.1;
  std::size_t partitions = 4;
  double tau = 0.1;
  std::size_t epochs = 30;
  std::size_t batch = 16;
  double lr = 0.1;
  std::uint64_t seed = 0;
  std::string out;
};

int run_pretrain(const PretrainArgs& a) {
  PretrainConfig cfg;
  cfg.pairing.strategy = parse_strategy(a.strategy);
  cfg.pairing.threshold = a.t;
  cfg.pairing.partitions = a.partitions;
  cfg.loss.temperature = a.tau;
  cfg.epochs = a.epochs;
  cfg.batch = a.batch;
  cfg.lr0 = a.lr;
  cfg.seed = a.seed;
  cfg.validate();
  const auto vols = all_volumes(load_manifest(a.manifest));
  const PretrainResult r = pretrain(vols, cfg);
  save_checkpoint(a.out, r.checkpoint);
  std::cout << "pretrained " << a.strategy << " for " << r.loss_history.size() << " steps, loss "
            << r.loss_history.front() << " -> " << r.loss_history.back() << ", false-negative rate "
            << r.false_negatives.false_neg_rate << "\n";
  return 0;
}

// ---- finetune ----

struct FinetuneArgs {
  std::string manifest;
  std::string init = "none";
  std::size_t m = 2;
  std::size_t epochs = 50;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  std::string out;
};

int run_finetune(const FinetuneArgs& a) {
  FinetuneConfig cfg;
  cfg.m = a.m;
  cfg.epochs = a.epochs;
  cfg.lr = a.lr;
  cfg.seed = a.seed;
  cfg.validate();
  std::optional<Checkpoint> init;
  if (a.init != "none") init = load_checkpoint(a.init);

  auto labeled = labeled_volumes(load_manifest(a.manifest));
  if (a.m > labeled.size()) {
    throw ConfigError("--m " + std::to_string(a.m) + " exceeds the " + std::to_string(labeled.size()) +
                      " labeled volumes");
  }
  Rng rng(a.seed);
  for (std::size_t i = 0; i < a.m; ++i) std::swap(labeled[i], labeled[i + rng.below(labeled.size() - i)]);
  labeled.erase(labeled.begin() + static_cast<std::ptrdiff_t>(a.m), labeled.end());

  const FinetuneResult r = finetune(init ? &*init : nullptr, labeled, cfg);
  Checkpoint out{r.config, r.params, {}};
  out.provenance.stage = "finetune";
  out.provenance.strategy = init ? init->provenance.strategy : std::string(kRandomInit);
  out.provenance.seed = a.seed;
  out.provenance.epochs = a.epochs;
  out.provenance.batch = cfg.batch;
  out.provenance.lr = a.lr;
  out.provenance.init = a.init;
  save_checkpoint(a.out, out);
  std::cout << "fine-tuned on";
  for (const auto& v : labeled) std::cout << " " << v.volume_id();
  std::cout << ", loss " << r.initial_loss << " -> " << r.final_loss << "\n";
  return 0;
}

// ---- evaluate ----

struct EvaluateArgs {
  std::string model;
  std::string manifest;
  std::string out;
};

int run_evaluate(const EvaluateArgs& a) {
  const Checkpoint model = load_checkpoint(a.model);
  const DatasetManifest manifest = load_manifest(a.manifest);
  auto vols = volumes_with_split(manifest, Split::kTest);
  if (vols.empty()) vols = labeled_volumes(manifest);
  const PreprocessConfig pre;
  json per_volume = json::array();
  for (const auto& v : vols) {
    const Volume one[] = {v};
    per_volume.push_back({{"volume_id", v.volume_id()}, {"dice", dice_json(evaluate_dice(model.params, model.config, one, pre))}});
  }
  const DiceScore pooled = evaluate_dice(model.params, model.config, vols, pre);
  json report = {{"model", a.model},
                 {"strategy", model.provenance.strategy},
                 {"init", model.provenance.init},
                 {"pooled", dice_json(pooled)},
                 {"volumes", per_volume}};
  write_text(a.out, report.dump(2) + "\n");
  std::cout << "mean Dice " << pooled.mean << " over " << vols.size() << " volumes\n";
  return 0;
}

// ---- compare ----

struct CompareArgs {
  std::string manifest;
  std::string pretrain_manifest;
  std::string config;
  std::vector<std::string> strategies{kRandomInit, "simclr", "gcl", "pcl"};
  std::vector<std::size_t> m_list{2};
  std::size_t folds = 5;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::size_t pretrain_epochs = 0;
  std::size_t finetune_epochs = 0;
  std::size_t threads = 0;
  std::string out;
};

int run_compare(const CompareArgs& a) {
  ExperimentSpec spec = a.config.empty() ? ExperimentSpec{} : load_experiment_spec(a.config);
  spec.manifest = a.manifest;
  if (!a.pretrain_manifest.empty()) spec.pretrain_manifest = a.pretrain_manifest;
  spec.strategies = a.strategies;
  spec.m_list = a.m_list;
  spec.folds = a.folds;
  spec.seeds = a.seeds;
  if (a.pretrain_epochs) spec.pretrain.epochs = a.pretrain_epochs;
  if (a.finetune_epochs) spec.finetune.epochs = a.finetune_epochs;
  if (a.threads) spec.threads = a.threads;
  const ExperimentReport r = run_experiment(spec);
  write_text(a.out, report_json(r));
  write_text(csv_path(a.out), report_csv(r));
  std::printf("%-8s %3s  %-16s\n", "strategy", "M", "Dice mean (std)");
  for (const auto& s : r.summaries)
    std::printf("%-8s %3zu  %.4f (%.4f)\n", s.strategy.c_str(), s.m, s.overall.mean, s.overall.std);
  std::printf("wall clock %.1f s\n", r.wall_clock_seconds);
  return 0;
}

// ---- analyze-fn ----

struct AnalyzeArgs {
  std::string manifest;
  double t_true = 0.1;
  std::vector<std::string> strategies{"simclr", "gcl", "pcl"};
  double t = 0.1;
  std::size_t partitions = 4;
  std::string out;
};

int run_analyze(const AnalyzeArgs& a) {
  if (!(a.t_true > 0.0 && a.t_true < 1.0)) throw ConfigError("--t-true must be in (0, 1)");
  const DatasetManifest manifest = load_manifest(a.manifest);
  // Every slice of every volume as one batch, each with its augmentation twin.
  std::vector<double> positions;
  for (const auto& v : all_volumes(manifest)) {
    const std::size_t n = v.slice_count();
    for (std::size_t m = 0; m < n; ++m) {
      const double p = static_cast<double>(m) / static_cast<double>(n);
      positions.push_back(p);
      positions.push_back(p);
    }
  }
  json rows = json::array();
  std::printf("%-8s %10s %10s %10s\n", "strategy", "FN", "FN rate", "FP rate");
  for (const auto& name : a.strategies) {
    PairingConfig cfg{parse_strategy(name), a.t, a.partitions};
    cfg.validate();
    const FalseNegativeStats s = false_negative_stats(build_mask(cfg, positions), positions, a.t_true);
    rows.push_back({{"strategy", name},
                    {"false_neg_count", s.false_neg_count},
                    {"false_neg_rate", s.false_neg_rate},
                    {"false_pos_count", s.false_pos_count},
                    {"false_pos_rate", s.false_pos_rate},
                    {"pair_count", s.pair_count}});
    std::printf("%-8s %10zu %10.6f %10.6f\n", name.c_str(), s.false_neg_count, s.false_neg_rate, s.false_pos_rate);
  }
  json report = {{"t_true", a.t_true}, {"t", a.t}, {"partitions", a.partitions},
                 {"samples", positions.size()}, {"strategies", rows}};
  write_text(a.out, report.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  // Training allocates many short-lived buffers of a few hundred KB; keep
  // them on the heap instead of mapping and unmapping each one.
  mallopt(M_MMAP_THRESHOLD, 64 << 20);
  mallopt(M_TRIM_THRESHOLD, 128 << 20);

  CLI::App app{"Positional contrastive pretraining on volumetric slices"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate-data", "Write a synthetic volume family and its manifest");
  g->add_option("--family", gen.family, "A or B")->capture_default_str();
  g->add_option("--volumes", gen.volumes)->capture_default_str();
  g->add_option("--seed", gen.seed)->capture_default_str();
  g->add_option("--out", gen.out, "Output directory")->required();

  PretrainArgs pre;
  auto* p = app.add_subcommand("pretrain", "Contrastive pretraining on every volume of a manifest");
  p->add_option("--manifest", pre.manifest)->required();
  p->add_option("--strategy", pre.strategy, "pcl, gcl or simclr")->capture_default_str();
  p->add_option("--t", pre.t, "PCL position threshold")->capture_default_str();
  p->add_option("--partitions", pre.partitions, "GCL partitions")->capture_default_str();
  p->add_option("--tau", pre.tau, "Temperature")->capture_default_str();
  p->add_option("--epochs", pre.epochs)->capture_default_str();
  p->add_option("--batch", pre.batch, "Source slices per step")->capture_default_str();
  p->add_option("--lr", pre.lr)->capture_default_str();
  p->add_option("--seed", pre.seed)->capture_default_str();
  p->add_option("--out", pre.out, "Checkpoint path")->required();

  FinetuneArgs fin;
  auto* f = app.add_subcommand("finetune", "Supervised segmentation on M labeled volumes");
  f->add_option("--manifest", fin.manifest)->required();
  f->add_option("--init", fin.init, "Pretrained checkpoint or 'none'")->capture_default_str();
  f->add_option("--m", fin.m)->capture_default_str();
  f->add_option("--epochs", fin.epochs)->capture_default_str();
  f->add_option("--lr", fin.lr)->capture_default_str();
  f->add_option("--seed", fin.seed)->capture_default_str();
  f->add_option("--out", fin.out, "Model path")->required();

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Dice of a model on the test (or labeled) volumes");
  e->add_option("--model", ev.model)->required();
  e->add_option("--manifest", ev.manifest)->required();
  e->add_option("--out", ev.out, "JSON report")->required();

  CompareArgs cmp;
  auto* c = app.add_subcommand("compare", "Cross-validated comparison of initializations");
  c->add_option("--manifest", cmp.manifest)->required();
  c->add_option("--pretrain-manifest", cmp.pretrain_manifest, "Pretrain on this family instead (transfer)");
  c->add_option("--config", cmp.config, "Experiment JSON with further settings");
  c->add_option("--strategies", cmp.strategies)->delimiter(',')->capture_default_str();
  c->add_option("--m-list", cmp.m_list)->delimiter(',')->capture_default_str();
  c->add_option("--folds", cmp.folds)->capture_default_str();
  c->add_option("--seeds", cmp.seeds)->delimiter(',')->capture_default_str();
  c->add_option("--pretrain-epochs", cmp.pretrain_epochs);
  c->add_option("--finetune-epochs", cmp.finetune_epochs);
  c->add_option("--threads", cmp.threads);
  c->add_option("--out", cmp.out, "JSON report; the CSV is written beside it")->required();

  AnalyzeArgs an;
  auto* a = app.add_subcommand("analyze-fn", "Count false-negative pairs of each pairing strategy");
  a->add_option("--manifest", an.manifest)->required();
  a->add_option("--t-true", an.t_true)->capture_default_str();
  a->add_option("--strategies", an.strategies)->delimiter(',')->capture_default_str();
  a->add_option("--t", an.t)->capture_default_str();
  a->add_option("--partitions", an.partitions)->capture_default_str();
  a->add_option("--out", an.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForAllHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kExitConfig;
  }

  try {
    if (*g) return run_generate(gen);
    if (*p) return run_pretrain(pre);
    if (*f) return run_finetune(fin);
    if (*e) return run_evaluate(ev);
    if (*c) return run_compare(cmp);
    if (*a) return run_analyze(an);
  } catch (const NumericAbort& err) {
    std::cerr << "numeric abort: " << err.what() << "\n";
    return kExitNumeric;
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& err) {
    std::cerr << "fatal: " << err.what() << "\n";
    return 1;
  }
  return 1;
}
