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

#include <cstdio>

#include <json.hpp>

#include "io_util.hpp"
#include "poscl/errors.hpp"
#include "poscl/experiment.hpp"

namespace poscl {

using nlohmann::json;

namespace {

json encoder_json(const EncoderConfig& e) {
  return {{"input_hw", {e.input_h, e.input_w}}, {"hidden_dims", e.hidden_dims}, {"repr_dim", e.repr_dim},
          {"proj_dim", e.proj_dim}};
}

json preprocess_json(const PreprocessConfig& p) {
  return {{"resolution", {p.resolution_x, p.resolution_y}},
          {"size", {p.height, p.width}},
          {"percentiles", {p.percentile_lo, p.percentile_hi}}};
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void read_encoder(const json& j, EncoderConfig& e) {
  if (j.contains("input_hw")) {
    const auto hw = j.at("input_hw").get<std::vector<std::size_t>>();
    if (hw.size() != 2) throw ConfigError("experiment: input_hw needs 2 entries");
    e.input_h = hw[0];
    e.input_w = hw[1];
  }
  maybe(j, "hidden_dims", e.hidden_dims);
  maybe(j, "repr_dim", e.repr_dim);
  maybe(j, "proj_dim", e.proj_dim);
}

void read_preprocess(const json& j, PreprocessConfig& p) {
  if (j.contains("resolution")) {
    const auto r = j.at("resolution").get<std::vector<double>>();
    if (r.size() != 2) throw ConfigError("experiment: resolution needs 2 entries");
    p.resolution_x = r[0];
    p.resolution_y = r[1];
  }
  if (j.contains("size")) {
    const auto s = j.at("size").get<std::vector<std::size_t>>();
    if (s.size() != 2) throw ConfigError("experiment: size needs 2 entries");
    p.height = s[0];
    p.width = s[1];
  }
  if (j.contains("percentiles")) {
    const auto s = j.at("percentiles").get<std::vector<double>>();
    if (s.size() != 2) throw ConfigError("experiment: percentiles needs 2 entries");
    p.percentile_lo = s[0];
    p.percentile_hi = s[1];
  }
}

json fn_json(const FalseNegativeStats& s) {
  return {{"false_neg_count", s.false_neg_count}, {"false_neg_rate", s.false_neg_rate},
          {"false_pos_count", s.false_pos_count}, {"false_pos_rate", s.false_pos_rate},
          {"pair_count", s.pair_count}};
}

json mean_std_json(const MeanStd& m) { return {{"mean", m.mean}, {"std", m.std}, {"n", m.n}}; }

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::string experiment_spec_json(const ExperimentSpec& s) {
  const auto& p = s.pretrain;
  const auto& f = s.finetune;
  json j = {
      {"manifest", s.manifest.string()},
      {"strategies", s.strategies},
      {"m_list", s.m_list},
      {"folds", s.folds},
      {"seeds", s.seeds},
      {"t_true", s.t_true},
      {"pretrain",
       {{"epochs", p.epochs},
        {"batch", p.batch},
        {"lr", p.lr0},
        {"t", p.pairing.threshold},
        {"partitions", p.pairing.partitions},
        {"tau", p.loss.temperature},
        {"steps_per_epoch", p.steps_per_epoch},
        {"augment",
         {{"max_translate", p.augment.max_translate},
          {"max_rotate_deg", p.augment.max_rotate_deg},
          {"scale", {p.augment.scale_lo, p.augment.scale_hi}}}},
        {"encoder", encoder_json(p.encoder)}}},
      {"finetune",
       {{"epochs", f.epochs},
        {"batch", f.batch},
        {"lr", f.lr},
        {"adam", {{"beta1", f.adam.beta1}, {"beta2", f.adam.beta2}, {"epsilon", f.adam.epsilon}}},
        {"encoder", encoder_json(f.encoder)}}},
      {"preprocess", preprocess_json(p.preprocess)},
  };
  if (s.pretrain_manifest) j["pretrain_manifest"] = s.pretrain_manifest->string();
  return j.dump(2);
}

ExperimentSpec parse_experiment_spec(const std::string& text, const std::filesystem::path& base_dir) {
  ExperimentSpec s;
  try {
    const json j = json::parse(text);
    auto path = [&](const std::string& v) {
      std::filesystem::path p(v);
      return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
    };
    s.manifest = path(j.at("manifest").get<std::string>());
    if (j.contains("pretrain_manifest")) s.pretrain_manifest = path(j.at("pretrain_manifest").get<std::string>());
    maybe(j, "strategies", s.strategies);
    maybe(j, "m_list", s.m_list);
    maybe(j, "folds", s.folds);
    maybe(j, "seeds", s.seeds);
    maybe(j, "t_true", s.t_true);
    maybe(j, "threads", s.threads);
    if (j.contains("pretrain")) {
      const auto& p = j.at("pretrain");
      maybe(p, "epochs", s.pretrain.epochs);
      maybe(p, "batch", s.pretrain.batch);
      maybe(p, "lr", s.pretrain.lr0);
      maybe(p, "t", s.pretrain.pairing.threshold);
      maybe(p, "partitions", s.pretrain.pairing.partitions);
      maybe(p, "tau", s.pretrain.loss.temperature);
      maybe(p, "steps_per_epoch", s.pretrain.steps_per_epoch);
      if (p.contains("augment")) {
        const auto& a = p.at("augment");
        maybe(a, "max_translate", s.pretrain.augment.max_translate);
        maybe(a, "max_rotate_deg", s.pretrain.augment.max_rotate_deg);
        if (a.contains("scale")) {
          const auto sc = a.at("scale").get<std::vector<double>>();
          if (sc.size() != 2) throw ConfigError("experiment: augment.scale needs 2 entries");
          s.pretrain.augment.scale_lo = sc[0];
          s.pretrain.augment.scale_hi = sc[1];
        }
      }
      if (p.contains("encoder")) read_encoder(p.at("encoder"), s.pretrain.encoder);
    }
    if (j.contains("finetune")) {
      const auto& f = j.at("finetune");
      maybe(f, "epochs", s.finetune.epochs);
      maybe(f, "batch", s.finetune.batch);
      maybe(f, "lr", s.finetune.lr);
      if (f.contains("adam")) {
        maybe(f.at("adam"), "beta1", s.finetune.adam.beta1);
        maybe(f.at("adam"), "beta2", s.finetune.adam.beta2);
        maybe(f.at("adam"), "epsilon", s.finetune.adam.epsilon);
      }
      if (f.contains("encoder")) read_encoder(f.at("encoder"), s.finetune.encoder);
    }
    if (j.contains("preprocess")) {
      read_preprocess(j.at("preprocess"), s.pretrain.preprocess);
      s.finetune.preprocess = s.pretrain.preprocess;
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("experiment spec: ") + e.what());
  }
  return s;
}

ExperimentSpec load_experiment_spec(const std::filesystem::path& path) {
  return parse_experiment_spec(detail::slurp(path), path.parent_path());
}

std::string report_json(const ExperimentReport& r) {
  json runs = json::array();
  for (const auto& x : r.runs) {
    runs.push_back({{"strategy", x.strategy},
                    {"m", x.m},
                    {"fold", x.fold},
                    {"seed", x.seed},
                    {"class_dice", x.class_dice},
                    {"mean_dice", x.mean_dice},
                    {"finetune_initial_loss", x.finetune_initial_loss},
                    {"finetune_final_loss", x.finetune_final_loss}});
  }
  json summaries = json::array();
  for (const auto& s : r.summaries) {
    json pc = json::array();
    for (const auto& c : s.per_class) pc.push_back(mean_std_json(c));
    summaries.push_back({{"strategy", s.strategy},
                         {"m", s.m},
                         {"dice", mean_std_json(s.overall)},
                         {"display", fixed(s.overall.mean).substr(0, 5) + "(" + fixed(s.overall.std).substr(1, 3) + ")"},
                         {"per_class", pc}});
  }
  json pre = json::array();
  for (const auto& p : r.pretraining) {
    pre.push_back({{"strategy", p.strategy},
                   {"seed", p.seed},
                   {"loss_history", p.loss_history},
                   {"false_negatives", fn_json(p.false_negatives)}});
  }
  json doc = {{"transfer", r.transfer},
              {"pretrain_family", r.pretrain_family},
              {"finetune_family", r.finetune_family},
              {"num_classes", r.num_classes},
              {"folds", r.folds},
              {"summaries", summaries},
              {"runs", runs},
              {"pretraining", pre},
              {"pretrain_label_reads", r.pretrain_label_reads},
              {"wall_clock_seconds", r.wall_clock_seconds},
              {"config", json::parse(r.config_json)}};
  return doc.dump(2) + "\n";
}

std::string report_csv(const ExperimentReport& r) {
  std::string out = "strategy,M,fold,seed,class,dice\n";
  for (const auto& x : r.runs) {
    const std::string prefix =
        x.strategy + "," + std::to_string(x.m) + "," + std::to_string(x.fold) + "," + std::to_string(x.seed) + ",";
    for (std::size_t c = 0; c < x.class_dice.size(); ++c) {
      out += prefix + std::to_string(c + 1) + "," + fixed(x.class_dice[c]) + "\n";
    }
    out += prefix + "mean," + fixed(x.mean_dice) + "\n";
  }
  return out;
}

}  // namespace poscl
