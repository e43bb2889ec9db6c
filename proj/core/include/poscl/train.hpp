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
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "poscl/augment.hpp"
#include "poscl/model.hpp"
#include "poscl/optim.hpp"
#include "poscl/pairing.hpp"
#include "poscl/pcl_loss.hpp"
#include "poscl/volume.hpp"

namespace poscl {

/// Contrastive pretraining settings. Desk-scale defaults; the reference
/// schedule is 200 epochs at batch 32.
struct PretrainConfig {
  std::size_t epochs = 30;
  std::size_t batch = 16;  // N source slices, 2N augmented views
  double lr0 = 0.1;        // SGD, cosine schedule
  PairingConfig pairing;
  LossConfig loss;
  std::uint64_t seed = 0;
  AugConfig augment;
  PreprocessConfig preprocess;
  EncoderConfig encoder;
  /// Steps per epoch; 0 means ceil(total slices / batch).
  std::size_t steps_per_epoch = 0;
  /// Ground-truth threshold for the false-negative tally kept during training.
  double t_true = 0.1;

  void validate() const;
};

/// Supervised fine-tuning settings. The reference run uses 100 epochs,
/// batch 5 and lr 5e-5; the desk defaults train a much smaller network for
/// fewer steps and use a larger rate.
struct FinetuneConfig {
  std::size_t epochs = 50;
  std::size_t batch = 5;
  double lr = 1e-3;  // Adam, cosine schedule
  AdamConfig adam;
  std::size_t m = 2;  // labeled volumes
  std::uint64_t seed = 0;
  PreprocessConfig preprocess;
  /// Architecture when no checkpoint is given. num_classes always comes from the data.
  EncoderConfig encoder;

  void validate() const;
};

/// Percentile-normalizes a volume and returns its slices resampled and padded.
std::vector<Slice2D> prepare_slices(const Volume& v, const PreprocessConfig& cfg, LabelPolicy labels);

/// What the pretraining loop hands its observer after each step.
struct PretrainStepTrace {
  std::size_t step = 0;
  double lr = 0.0;
  double loss = 0.0;
  const PairMask* mask = nullptr;
  std::span<const double> positions;
};
using PretrainHook = std::function<void(const PretrainStepTrace&)>;

struct PretrainResult {
  Checkpoint checkpoint;
  std::vector<double> loss_history;  // one entry per step
  FalseNegativeStats false_negatives;  // summed over every step's mask
  std::uint64_t label_reads = 0;     // probe; always 0 on return
  std::size_t degenerate_rows = 0;
  std::size_t skipped_rows = 0;
};

/// One optimizer step of the contrastive objective on a ready-made batch.
/// The step follows the gradient of the loss divided by the batch size 2N;
/// the returned value is the undivided loss before the update.
double contrastive_step(Params& params, OptimizerState& state, const EncoderConfig& cfg, const Tensor& images,
                        const PairMask& mask, const LossConfig& loss, double lr);

/// Contrastive pretraining of encoder and projection head. Never reads labels.
PretrainResult pretrain(std::span<const Volume> volumes, const PretrainConfig& cfg, const PretrainHook& hook = {});

/// Total label reads observed by pretrain() across all threads since start-up.
std::uint64_t pretrain_label_reads_total();

struct FinetuneResult {
  Params params;
  EncoderConfig config;
  std::vector<double> loss_history;  // mean batch loss per epoch
  double initial_loss = 0.0;         // cross-entropy over the whole training set
  double final_loss = 0.0;
};

/// Starting weights for fine-tuning: encoder tensors copied from `init` when
/// given, projection and decoder freshly initialized from `seed`.
Params finetune_init(const Checkpoint* init, const EncoderConfig& config, std::uint64_t seed);

/// Supervised segmentation training on labeled volumes. With a checkpoint the
/// encoder starts from its weights; without one everything is random. The
/// decoder is always fresh.
FinetuneResult finetune(const Checkpoint* init, std::span<const Volume> labeled, const FinetuneConfig& cfg);

/// Mean per-pixel cross-entropy of the model over prepared slices.
double cross_entropy(const Params& params, const EncoderConfig& cfg, std::span<const Slice2D> slices);

}  // namespace poscl
