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

#include <json.hpp>

#include "io_util.hpp"
#include "poscl/errors.hpp"
#include "poscl/model.hpp"

namespace poscl {

using nlohmann::json;

namespace {

json config_to_json(const EncoderConfig& c) {
  return {{"input_hw", {c.input_h, c.input_w}}, {"hidden_dims", c.hidden_dims}, {"repr_dim", c.repr_dim},
          {"proj_dim", c.proj_dim},            {"num_classes", c.num_classes}};
}

EncoderConfig config_from_json(const json& j) {
  EncoderConfig c;
  const auto hw = j.at("input_hw").get<std::vector<std::size_t>>();
  if (hw.size() != 2) throw FormatError("checkpoint: input_hw needs 2 entries");
  c.input_h = hw[0];
  c.input_w = hw[1];
  c.hidden_dims = j.at("hidden_dims").get<std::vector<std::size_t>>();
  c.repr_dim = j.at("repr_dim").get<std::size_t>();
  c.proj_dim = j.at("proj_dim").get<std::size_t>();
  c.num_classes = j.at("num_classes").get<std::size_t>();
  return c;
}

json provenance_to_json(const Provenance& p) {
  return {{"stage", p.stage},   {"strategy", p.strategy}, {"threshold", p.threshold},
          {"partitions", p.partitions}, {"temperature", p.temperature}, {"seed", p.seed},
          {"epochs", p.epochs}, {"batch", p.batch},       {"lr", p.lr},
          {"init", p.init}};
}

Provenance provenance_from_json(const json& j) {
  Provenance p;
  p.stage = j.at("stage").get<std::string>();
  p.strategy = j.at("strategy").get<std::string>();
  p.threshold = j.at("threshold").get<double>();
  p.partitions = j.at("partitions").get<std::size_t>();
  p.temperature = j.at("temperature").get<double>();
  p.seed = j.at("seed").get<std::uint64_t>();
  p.epochs = j.at("epochs").get<std::size_t>();
  p.batch = j.at("batch").get<std::size_t>();
  p.lr = j.at("lr").get<double>();
  p.init = j.at("init").get<std::string>();
  return p;
}

}  // namespace

std::string encode_checkpoint(const Checkpoint& c) {
  json dir = json::array();
  for (const auto& [name, t] : c.params.entries()) dir.push_back({{"name", name}, {"shape", t.shape()}});
  const json header = {{"magic", "PCKP"},
                       {"version", 1},
                       {"config", config_to_json(c.config)},
                       {"provenance", provenance_to_json(c.provenance)},
                       {"init_seed", c.params.init_seed},
                       {"tensors", dir}};
  std::string out = header.dump();
  out.push_back('\n');
  for (const auto& [_, t] : c.params.entries())
    for (double v : t.data()) detail::append_le(out, v);
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  const auto eol = bytes.find('\n');
  if (eol == std::string::npos) throw FormatError("checkpoint: missing header line");
  Checkpoint c;
  try {
    const json header = json::parse(bytes.substr(0, eol));
    if (header.at("magic") != "PCKP" || header.at("version") != 1) throw FormatError("checkpoint: bad magic/version");
    c.config = config_from_json(header.at("config"));
    c.provenance = provenance_from_json(header.at("provenance"));
    c.params.init_seed = header.at("init_seed").get<std::uint64_t>();
    const char* p = bytes.data() + eol + 1;
    const char* end = bytes.data() + bytes.size();
    for (const auto& entry : header.at("tensors")) {
      const auto shape = entry.at("shape").get<Shape>();
      const std::size_t n = shape_size(shape);
      if (static_cast<std::size_t>(end - p) < n * 8) throw FormatError("checkpoint: truncated tensor data");
      std::vector<double> data(n);
      for (std::size_t i = 0; i < n; ++i, p += 8) data[i] = detail::read_le<double>(p);
      c.params.add(entry.at("name").get<std::string>(), Tensor(shape, std::move(data)));
    }
    if (p != end) throw FormatError("checkpoint: trailing bytes after tensor data");
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint: bad header: ") + e.what());
  }
  c.config.validate();
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  detail::spill(path, encode_checkpoint(c));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(detail::slurp(path)); }

}  // namespace poscl
