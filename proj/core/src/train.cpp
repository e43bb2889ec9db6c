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

#include "poscl/train.hpp"

#include <algorithm>
#include <atomic>

#include "poscl/errors.hpp"

namespace poscl {

namespace {

std::atomic<std::uint64_t> g_pretrain_label_reads{0};

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

std::vector<std::size_t> gather_labels(std::span<const Slice2D> slices) {
  std::vector<std::size_t> out;
  for (const auto& s : slices) {
    const auto l = s.labels();
    out.insert(out.end(), l.begin(), l.end());
  }
  return out;
}

}  // namespace

void PretrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("pretrain: epochs must be at least 1");
  if (batch < 1) throw ConfigError("pretrain: batch must be at least 1");
  if (!(lr0 > 0.0)) throw ConfigError("pretrain: lr0 must be positive");
  pairing.validate();
  loss.validate();
  augment.validate();
  preprocess.validate();
  encoder.validate();
  if (!(t_true > 0.0 && t_true < 1.0)) throw ConfigError("pretrain: t_true must lie in (0, 1)");
}

void FinetuneConfig::validate() const {
  if (epochs < 1) throw ConfigError("finetune: epochs must be at least 1");
  if (batch < 1) throw ConfigError("finetune: batch must be at least 1");
  if (!(lr > 0.0)) throw ConfigError("finetune: lr must be positive");
  if (m < 1) throw ConfigError("finetune: M must be at least 1");
  preprocess.validate();
}

std::vector<Slice2D> prepare_slices(const Volume& v, const PreprocessConfig& cfg, LabelPolicy labels) {
  const Volume source = labels == LabelPolicy::kDrop ? v.without_labels() : v;
  const Volume normalized = percentile_normalize(source, cfg.percentile_lo, cfg.percentile_hi);
  std::vector<Slice2D> out;
  out.reserve(normalized.slice_count());
  for (std::size_t m = 0; m < normalized.slice_count(); ++m) {
    out.push_back(resample_pad(extract_slice(normalized, m, labels), cfg));
  }
  return out;
}

double contrastive_step(Params& params, OptimizerState& state, const EncoderConfig& cfg, const Tensor& images,
                        const PairMask& mask, const LossConfig& loss_cfg, double lr) {
  NamedGradients grads;
  double value = 0.0;
  try {
    ad::Graph g;
    const BoundParams bound(g, params, {ParamGroup::kEncoder, ParamGroup::kProjection});
    const Encoded enc = encode(bound, cfg, g.constant(images));
    const PclLoss loss = pcl_loss(enc.embedding, mask, loss_cfg);
    value = loss.report.total;
    // Step on the batch mean so the learning rate does not scale with 2N.
    const ad::Var objective = ad::scale(loss.loss, 1.0 / static_cast<double>(mask.size()));
    grads = bound.named_gradients(g.backward(objective));
  } catch (const DomainError& e) {
    throw NumericAbort(std::string("contrastive step at optimizer step ") + std::to_string(state.step) + ": " + e.what());
  }
  optimizer_step(params, grads, state, lr);
  return value;
}

PretrainResult pretrain(std::span<const Volume> volumes, const PretrainConfig& cfg, const PretrainHook& hook) {
  cfg.validate();
  if (volumes.empty()) throw ContractError("pretrain: no volumes");
  const std::uint64_t reads_before = label_reads();

  // Labels are stripped before anything else touches the volumes.
  std::vector<Volume> pool;
  pool.reserve(volumes.size());
  std::size_t total_slices = 0;
  for (const auto& v : volumes) {
    pool.push_back(percentile_normalize(v.without_labels(), cfg.preprocess.percentile_lo, cfg.preprocess.percentile_hi));
    total_slices += v.slice_count();
  }
  if (cfg.batch > total_slices) {
    throw ConfigError("pretrain: batch " + std::to_string(cfg.batch) + " exceeds the " + std::to_string(total_slices) +
                      " available slices");
  }
  const std::size_t steps_per_epoch = cfg.steps_per_epoch ? cfg.steps_per_epoch : ceil_div(total_slices, cfg.batch);
  const std::size_t total_steps = cfg.epochs * steps_per_epoch;

  PretrainResult result;
  result.checkpoint.config = cfg.encoder;
  result.checkpoint.params = init_params(cfg.encoder, Rng::derive(cfg.seed, 0));
  Params& params = result.checkpoint.params;
  Rng rng(Rng::derive(cfg.seed, 1));
  OptimizerState state = OptimizerState::sgd();
  result.loss_history.reserve(total_steps);

  for (std::size_t step = 0; step < total_steps; ++step) {
    const double lr = cosine_lr(step, total_steps, cfg.lr0);
    SliceBatch batch = sample_batch(pool, cfg.batch, rng, LabelPolicy::kDrop);
    for (auto& s : batch) s = resample_pad(s, cfg.preprocess);
    const AugBatch views = make_contrastive_batch(batch, cfg.augment, rng);
    const Tensor images = stack_images(views.images, cfg.encoder);
    const PairMask mask = build_mask(cfg.pairing, views.positions);

    const double loss = contrastive_step(params, state, cfg.encoder, images, mask, cfg.loss, lr);
    result.loss_history.push_back(loss);
    for (std::size_t i = 0; i < mask.size(); ++i) result.skipped_rows += mask.row_count(i) == 0;

    const auto fn = false_negative_stats(mask, views.positions, cfg.t_true);
    result.false_negatives.false_neg_count += fn.false_neg_count;
    result.false_negatives.false_pos_count += fn.false_pos_count;
    result.false_negatives.pair_count += fn.pair_count;
    if (hook) hook(PretrainStepTrace{step, lr, loss, &mask, views.positions});
  }
  auto& fn = result.false_negatives;
  if (fn.pair_count) {
    fn.false_neg_rate = static_cast<double>(fn.false_neg_count) / static_cast<double>(fn.pair_count);
    fn.false_pos_rate = static_cast<double>(fn.false_pos_count) / static_cast<double>(fn.pair_count);
  }

  result.label_reads = label_reads() - reads_before;
  g_pretrain_label_reads += result.label_reads;
  if (result.label_reads != 0) {
    throw ContractError("pretrain: label grids were read " + std::to_string(result.label_reads) + " time(s)");
  }

  auto& prov = result.checkpoint.provenance;
  prov.stage = "pretrain";
  prov.strategy = to_string(cfg.pairing.strategy);
  prov.threshold = cfg.pairing.threshold;
  prov.partitions = cfg.pairing.partitions;
  prov.temperature = cfg.loss.temperature;
  prov.seed = cfg.seed;
  prov.epochs = cfg.epochs;
  prov.batch = cfg.batch;
  prov.lr = cfg.lr0;
  prov.init = "none";
  return result;
}

std::uint64_t pretrain_label_reads_total() { return g_pretrain_label_reads.load(); }

double cross_entropy(const Params& params, const EncoderConfig& cfg, std::span<const Slice2D> slices) {
  ad::Graph g;
  const BoundParams bound(g, params, {});
  const auto logits = segment(bound, cfg, g.constant(stack_images(slices, cfg)));
  const auto labels = gather_labels(slices);
  return ad::softmax_cross_entropy(logits, labels).value().item();
}

Params finetune_init(const Checkpoint* init, const EncoderConfig& config, std::uint64_t seed) {
  Params params = init_params(config, Rng::derive(seed, 2));
  if (init) {
    for (const auto& [name, value] : init->params.entries()) {
      if (group_of(name) != ParamGroup::kEncoder) continue;
      if (!params.contains(name) || params.at(name).shape() != value.shape()) {
        throw ConfigError("finetune: checkpoint tensor " + name + " has shape " + to_string(value.shape()));
      }
      params.at(name) = value;
    }
  }
  return params;
}

FinetuneResult finetune(const Checkpoint* init, std::span<const Volume> labeled, const FinetuneConfig& cfg) {
  cfg.validate();
  if (labeled.empty()) throw ContractError("finetune: no labeled volumes");
  std::size_t num_classes = 0;
  for (const auto& v : labeled) {
    if (!v.has_labels()) throw ContractError("finetune: volume " + v.volume_id() + " has no labels");
    num_classes = std::max(num_classes, v.num_classes());
  }

  FinetuneResult result;
  result.config = init ? init->config : cfg.encoder;
  result.config.num_classes = num_classes;
  result.config.validate();
  if (result.config.input_h != cfg.preprocess.height || result.config.input_w != cfg.preprocess.width) {
    throw ConfigError("finetune: model input " + std::to_string(result.config.input_h) + "x" +
                      std::to_string(result.config.input_w) + " differs from preprocessing size " +
                      std::to_string(cfg.preprocess.height) + "x" + std::to_string(cfg.preprocess.width));
  }
  result.params = finetune_init(init, result.config, cfg.seed);

  std::vector<Slice2D> slices;
  for (const auto& v : labeled) {
    auto s = prepare_slices(v, cfg.preprocess, LabelPolicy::kKeep);
    std::move(s.begin(), s.end(), std::back_inserter(slices));
  }
  const std::size_t steps_per_epoch = ceil_div(slices.size(), cfg.batch);
  const std::size_t total_steps = cfg.epochs * steps_per_epoch;
  OptimizerState state = OptimizerState::make_adam(cfg.adam);
  Rng rng(Rng::derive(cfg.seed, 3));
  std::vector<std::size_t> order(slices.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  result.initial_loss = cross_entropy(result.params, result.config, slices);
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < steps_per_epoch; ++b, ++step) {
      std::vector<Slice2D> chunk;
      for (std::size_t k = b * cfg.batch; k < std::min(slices.size(), (b + 1) * cfg.batch); ++k) {
        chunk.push_back(slices[order[k]]);
      }
      NamedGradients grads;
      try {
        ad::Graph g;
        const BoundParams bound(g, result.params, {ParamGroup::kEncoder, ParamGroup::kDecoder});
        const auto logits = segment(bound, result.config, g.constant(stack_images(chunk, result.config)));
        const auto labels = gather_labels(chunk);
        const auto loss = ad::softmax_cross_entropy(logits, labels);
        epoch_loss += loss.value().item();
        grads = bound.named_gradients(g.backward(loss));
      } catch (const DomainError& e) {
        throw NumericAbort("finetune step " + std::to_string(step) + ": " + e.what());
      }
      optimizer_step(result.params, grads, state, cosine_lr(step, total_steps, cfg.lr));
    }
    result.loss_history.push_back(epoch_loss / static_cast<double>(steps_per_epoch));
  }
  result.final_loss = cross_entropy(result.params, result.config, slices);
  return result;
}

}  // namespace poscl
