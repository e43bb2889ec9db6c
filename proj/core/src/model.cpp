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

#include "poscl/model.hpp"

#include <algorithm>
#include <cmath>

#include "poscl/errors.hpp"
#include "poscl/rng.hpp"

namespace poscl {

namespace {

std::string encoder_name(std::size_t layer, const char* what) {
  return "encoder." + std::to_string(layer) + "." + what;
}
std::string projection_name(std::size_t layer, const char* what) {
  return "projection." + std::to_string(layer) + "." + what;
}

}  // namespace

void EncoderConfig::validate() const {
  if (input_h == 0 || input_w == 0) throw ConfigError("encoder: input size must be positive");
  if (repr_dim == 0 || proj_dim == 0) throw ConfigError("encoder: repr_dim and proj_dim must be positive");
  for (auto d : hidden_dims)
    if (d == 0) throw ConfigError("encoder: hidden widths must be positive");
  if (num_classes < 2) throw ConfigError("encoder: need at least 2 segmentation classes");
}

ParamGroup group_of(const std::string& name) {
  if (name.rfind("encoder.", 0) == 0) return ParamGroup::kEncoder;
  if (name.rfind("projection.", 0) == 0) return ParamGroup::kProjection;
  if (name.rfind("decoder.", 0) == 0) return ParamGroup::kDecoder;
  throw ContractError("unknown parameter group for '" + name + "'");
}

void Params::add(std::string name, Tensor value) {
  if (contains(name)) throw ContractError("duplicate parameter " + name);
  index_.emplace(name, entries_.size());
  entries_.emplace_back(std::move(name), std::move(value));
}

const Tensor& Params::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("no parameter named " + name);
  return entries_[it->second].second;
}

Tensor& Params::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("no parameter named " + name);
  return entries_[it->second].second;
}

std::size_t Params::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : entries_) n += t.size();
  return n;
}

Params init_params(const EncoderConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  Params p;
  p.init_seed = seed;
  auto dense = [&](const std::string& w, const std::string& b, std::size_t fan_in, std::size_t fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::vector<double> data(fan_in * fan_out);
    for (auto& v : data) v = rng.uniform(-limit, limit);
    p.add(w, Tensor({fan_in, fan_out}, std::move(data)));
    p.add(b, Tensor::zeros({fan_out}));
  };
  std::size_t width = cfg.input_size();
  for (std::size_t l = 0; l < cfg.encoder_layers(); ++l) {
    const std::size_t out = l < cfg.hidden_dims.size() ? cfg.hidden_dims[l] : cfg.repr_dim;
    dense(encoder_name(l, "weight"), encoder_name(l, "bias"), width, out);
    width = out;
  }
  dense(projection_name(0, "weight"), projection_name(0, "bias"), cfg.repr_dim, cfg.repr_dim);
  dense(projection_name(1, "weight"), projection_name(1, "bias"), cfg.repr_dim, cfg.proj_dim);
  dense("decoder.weight", "decoder.bias", cfg.repr_dim, cfg.num_classes * cfg.input_size());
  return p;
}

BoundParams::BoundParams(ad::Graph& graph, const Params& params, std::vector<ParamGroup> trainable) : graph_(&graph) {
  for (const auto& [name, value] : params.entries()) {
    const bool train = std::find(trainable.begin(), trainable.end(), group_of(name)) != trainable.end();
    vars_.emplace_back(name, train ? graph.leaf(value) : graph.constant(value));
    trainable_.push_back(train);
  }
}

ad::Var BoundParams::at(const std::string& name) const {
  for (const auto& [n, v] : vars_)
    if (n == name) return v;
  throw ContractError("parameter " + name + " is not bound");
}

std::map<std::string, Tensor> BoundParams::named_gradients(ad::Gradients grads) const {
  std::map<std::string, Tensor> out;
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    if (trainable_[i]) out.emplace(vars_[i].first, grads.take(vars_[i].second.id()));
  }
  return out;
}

namespace {

ad::Var dense(const BoundParams& p, const ad::Var& x, const std::string& w, const std::string& b) {
  return ad::add_row_bias(ad::matmul(x, p.at(w)), p.at(b));
}

ad::Var flatten(const EncoderConfig& cfg, const ad::Var& images) {
  const auto& s = images.shape();
  const bool ok = (s.size() == 3 && s[1] == cfg.input_h && s[2] == cfg.input_w) ||
                  (s.size() == 2 && s[1] == cfg.input_size());
  if (!ok) {
    throw DimensionError("model: images of shape " + to_string(s) + " do not match input " +
                         std::to_string(cfg.input_h) + "x" + std::to_string(cfg.input_w));
  }
  return s.size() == 2 ? images : ad::reshape(images, {s[0], cfg.input_size()});
}

}  // namespace

ad::Var encode_repr(const BoundParams& p, const EncoderConfig& cfg, const ad::Var& images) {
  ad::Var x = flatten(cfg, images);
  for (std::size_t l = 0; l < cfg.encoder_layers(); ++l) {
    x = ad::relu(dense(p, x, encoder_name(l, "weight"), encoder_name(l, "bias")));
  }
  return x;
}

Encoded encode(const BoundParams& p, const EncoderConfig& cfg, const ad::Var& images) {
  const ad::Var h = encode_repr(p, cfg, images);
  const ad::Var g0 = ad::relu(dense(p, h, projection_name(0, "weight"), projection_name(0, "bias")));
  const ad::Var g1 = dense(p, g0, projection_name(1, "weight"), projection_name(1, "bias"));
  auto z = ad::l2_normalize_rows(g1);
  return {h, z.rows, z.degenerate_rows};
}

ad::Var segment(const BoundParams& p, const EncoderConfig& cfg, const ad::Var& images) {
  const ad::Var h = encode_repr(p, cfg, images);
  const ad::Var logits = dense(p, h, "decoder.weight", "decoder.bias");
  return ad::reshape(logits, {h.shape()[0], cfg.num_classes, cfg.input_h, cfg.input_w});
}

Tensor stack_images(std::span<const Slice2D> slices, const EncoderConfig& cfg) {
  if (slices.empty()) throw ContractError("stack_images: no slices");
  std::vector<double> data;
  data.reserve(slices.size() * cfg.input_size());
  for (const auto& s : slices) {
    if (s.height != cfg.input_h || s.width != cfg.input_w) {
      throw DimensionError("stack_images: slice is " + std::to_string(s.height) + "x" + std::to_string(s.width) +
                           ", model expects " + std::to_string(cfg.input_h) + "x" + std::to_string(cfg.input_w));
    }
    data.insert(data.end(), s.pixels.begin(), s.pixels.end());
  }
  return Tensor({slices.size(), cfg.input_h, cfg.input_w}, std::move(data));
}

std::vector<std::uint16_t> predict_labels(const Params& params, const EncoderConfig& cfg, const Tensor& images) {
  ad::Graph g;
  const BoundParams bound(g, params, {});
  const ad::Var logits = segment(bound, cfg, g.constant(images));
  const auto& v = logits.value();
  const std::size_t batch = v.shape()[0], classes = v.shape()[1], pixels = cfg.input_size();
  std::vector<std::uint16_t> out(batch * pixels);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t q = 0; q < pixels; ++q) {
      std::size_t best = 0;
      double best_v = v[(b * classes) * pixels + q];
      for (std::size_t c = 1; c < classes; ++c) {
        const double x = v[(b * classes + c) * pixels + q];
        if (x > best_v) {
          best_v = x;
          best = c;
        }
      }
      out[b * pixels + q] = static_cast<std::uint16_t>(best);
    }
  }
  return out;
}

}  // namespace poscl
