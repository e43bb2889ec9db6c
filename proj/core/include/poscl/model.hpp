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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "poscl/autodiff.hpp"
#include "poscl/volume.hpp"

namespace poscl {

/// Shapes of the dense encoder f, projection head g and segmentation decoder.
struct EncoderConfig {
  std::size_t input_h = 16;
  std::size_t input_w = 16;
  std::vector<std::size_t> hidden_dims{256, 128};
  std::size_t repr_dim = 64;
  std::size_t proj_dim = 32;
  std::size_t num_classes = 4;

  void validate() const;
  std::size_t input_size() const { return input_h * input_w; }
  std::size_t encoder_layers() const { return hidden_dims.size() + 1; }
  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

/// Which part of the network a parameter belongs to, from its name prefix.
enum class ParamGroup { kEncoder, kProjection, kDecoder };
ParamGroup group_of(const std::string& name);

/// Ordered named tensors.
class Params {
 public:
  void add(std::string name, Tensor value);
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  const Tensor& at(const std::string& name) const;
  Tensor& at(const std::string& name);
  const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
  std::vector<std::pair<std::string, Tensor>>& entries() { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t scalar_count() const;

  std::uint64_t init_seed = 0;

  friend bool operator==(const Params& a, const Params& b) { return a.entries_ == b.entries_; }

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
  std::map<std::string, std::size_t> index_;
};

/// Glorot-uniform weights (stored [fan_in x fan_out]) and zero biases.
Params init_params(const EncoderConfig& cfg, std::uint64_t seed);

/// Params placed on a graph. Groups listed in `trainable` become leaves that
/// receive gradients; the rest enter as constants.
class BoundParams {
 public:
  BoundParams(ad::Graph& graph, const Params& params,
              std::vector<ParamGroup> trainable = {ParamGroup::kEncoder, ParamGroup::kProjection,
                                                   ParamGroup::kDecoder});

  ad::Graph& graph() const { return *graph_; }
  ad::Var at(const std::string& name) const;
  /// Gradients keyed by parameter name, for trainable params only.
  std::map<std::string, Tensor> named_gradients(ad::Gradients grads) const;

 private:
  ad::Graph* graph_;
  std::vector<std::pair<std::string, ad::Var>> vars_;
  std::vector<bool> trainable_;
};

struct Encoded {
  ad::Var repr;       // h = f(x), [B x repr_dim]
  ad::Var embedding;  // z = normalize(g(h)), [B x proj_dim]
  std::size_t degenerate_rows = 0;
};

/// images: [B x H x W] or [B x H*W].
ad::Var encode_repr(const BoundParams& p, const EncoderConfig& cfg, const ad::Var& images);
Encoded encode(const BoundParams& p, const EncoderConfig& cfg, const ad::Var& images);
/// Per-pixel class logits [B x C x H x W]. Uses the encoder and decoder only.
ad::Var segment(const BoundParams& p, const EncoderConfig& cfg, const ad::Var& images);

/// Stacks slice pixels into [B x H x W]; every slice must match cfg's input size.
Tensor stack_images(std::span<const Slice2D> slices, const EncoderConfig& cfg);

/// Argmax class per pixel, [B * H * W].
std::vector<std::uint16_t> predict_labels(const Params& params, const EncoderConfig& cfg, const Tensor& images);

// ---- checkpoints ----

/// Training provenance carried alongside the weights.
struct Provenance {
  std::string stage;          // "pretrain" or "finetune"
  std::string strategy;       // pcl | gcl | simclr | random
  double threshold = 0.0;
  std::size_t partitions = 0;
  double temperature = 0.0;
  std::uint64_t seed = 0;
  std::size_t epochs = 0;
  std::size_t batch = 0;
  double lr = 0.0;
  std::string init;           // finetune: checkpoint the encoder came from, or "none"
  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct Checkpoint {
  EncoderConfig config;
  Params params;
  Provenance provenance;
  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

/// One JSON header line (config, provenance, tensor directory) followed by the
/// tensors as little-endian float64 in directory order.
std::string encode_checkpoint(const Checkpoint& c);
Checkpoint decode_checkpoint(const std::string& bytes);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace poscl
