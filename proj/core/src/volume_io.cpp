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

#include "poscl/volume_io.hpp"

#include <set>

#include <json.hpp>

#include "io_util.hpp"
#include "poscl/errors.hpp"

namespace poscl {

using nlohmann::json;

using detail::append_le;
using detail::read_le;
using detail::slurp;
using detail::spill;

std::string encode_vvol(const Volume& v) {
  const auto& d = v.dims();
  const auto& s = v.spacing();
  json header = {
      {"magic", "VVOL"},
      {"version", 1},
      {"dims", {d.nx, d.ny, d.nz}},
      {"spacing", {s.sx, s.sy, s.sz}},
      {"has_labels", v.has_labels()},
      {"volume_id", v.volume_id()},
      {"family_id", v.family_id()},
      {"num_classes", v.num_classes()},
  };
  std::string out = header.dump();
  out.push_back('\n');
  out.reserve(out.size() + v.voxel_count() * (4 + (v.has_labels() ? 2 : 0)));
  for (float f : v.intensities()) append_le(out, f);
  if (v.has_labels()) {
    for (std::uint16_t l : v.labels()) append_le(out, l);
  }
  return out;
}

Volume decode_vvol(const std::string& bytes) {
  const auto eol = bytes.find('\n');
  if (eol == std::string::npos) throw FormatError("VVOL: missing header line");
  json header;
  try {
    header = json::parse(bytes.substr(0, eol));
  } catch (const json::exception& e) {
    throw FormatError(std::string("VVOL: bad header: ") + e.what());
  }
  try {
    if (header.at("magic") != "VVOL") throw FormatError("VVOL: bad magic");
    if (header.at("version") != 1) throw FormatError("VVOL: unsupported version " + header.at("version").dump());
    const auto dims = header.at("dims").get<std::vector<std::size_t>>();
    const auto spacing = header.at("spacing").get<std::vector<double>>();
    if (dims.size() != 3 || spacing.size() != 3) throw FormatError("VVOL: dims and spacing need 3 entries");
    const bool has_labels = header.at("has_labels").get<bool>();
    const std::size_t n = dims[0] * dims[1] * dims[2];
    const std::size_t expected = eol + 1 + n * 4 + (has_labels ? n * 2 : 0);
    if (bytes.size() != expected) {
      throw FormatError("VVOL: payload is " + std::to_string(bytes.size()) + " bytes, expected " +
                        std::to_string(expected));
    }
    const char* p = bytes.data() + eol + 1;
    std::vector<float> intensities(n);
    for (std::size_t i = 0; i < n; ++i, p += 4) intensities[i] = read_le<float>(p);
    std::optional<std::vector<std::uint16_t>> labels;
    if (has_labels) {
      labels.emplace(n);
      for (std::size_t i = 0; i < n; ++i, p += 2) (*labels)[i] = read_le<std::uint16_t>(p);
    }
    return Volume({dims[0], dims[1], dims[2]}, {spacing[0], spacing[1], spacing[2]}, std::move(intensities),
                  std::move(labels), header.at("num_classes").get<std::size_t>(),
                  header.at("volume_id").get<std::string>(), header.at("family_id").get<std::string>());
  } catch (const json::exception& e) {
    throw FormatError(std::string("VVOL: bad header field: ") + e.what());
  }
}

void write_vvol(const std::filesystem::path& path, const Volume& v) { spill(path, encode_vvol(v)); }
Volume read_vvol(const std::filesystem::path& path) { return decode_vvol(slurp(path)); }

std::string to_string(Split s) {
  switch (s) {
    case Split::kPretrain: return "pretrain";
    case Split::kLabeled: return "labeled";
    case Split::kTest: return "test";
  }
  return "?";
}

Split parse_split(const std::string& s) {
  if (s == "pretrain") return Split::kPretrain;
  if (s == "labeled" || s == "labeled-pool") return Split::kLabeled;
  if (s == "test") return Split::kTest;
  throw ConfigError("unknown split '" + s + "' (expected pretrain, labeled or test)");
}

std::filesystem::path DatasetManifest::resolve(const ManifestEntry& e) const {
  std::filesystem::path p(e.path);
  return p.is_absolute() ? p : base_dir / p;
}

std::vector<ManifestEntry> DatasetManifest::with_split(Split s) const {
  std::vector<ManifestEntry> out;
  for (const auto& e : entries)
    if (e.split == s) out.push_back(e);
  return out;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) throw ConfigError("manifest " + path.string() + " does not exist");
  json doc;
  try {
    doc = json::parse(slurp(path));
  } catch (const json::exception& e) {
    throw FormatError("manifest " + path.string() + ": " + e.what());
  }
  if (!doc.is_array()) throw FormatError("manifest " + path.string() + ": expected a JSON list");
  DatasetManifest m;
  m.base_dir = path.parent_path();
  std::set<std::string> seen;
  for (const auto& item : doc) {
    ManifestEntry e;
    try {
      e.path = item.at("path").get<std::string>();
      e.family_id = item.at("family_id").get<std::string>();
      e.split = parse_split(item.at("split").get<std::string>());
    } catch (const json::exception& ex) {
      throw FormatError("manifest " + path.string() + ": " + ex.what());
    }
    if (!seen.insert(e.path).second) throw ConfigError("manifest " + path.string() + ": duplicate path " + e.path);
    if (!std::filesystem::exists(m.resolve(e))) {
      throw ConfigError("manifest " + path.string() + ": missing volume file " + m.resolve(e).string());
    }
    m.entries.push_back(std::move(e));
  }
  return m;
}

void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
  json doc = json::array();
  for (const auto& e : manifest.entries) {
    doc.push_back({{"path", e.path}, {"family_id", e.family_id}, {"split", to_string(e.split)}});
  }
  spill(path, doc.dump(2) + "\n");
}

std::vector<Volume> load_volumes(const DatasetManifest& manifest, const std::vector<ManifestEntry>& entries) {
  std::vector<Volume> out;
  out.reserve(entries.size());
  for (const auto& e : entries) {
    out.push_back(read_vvol(manifest.resolve(e)));
    if (out.back().family_id() != e.family_id) {
      throw ConfigError("volume " + e.path + " has family '" + out.back().family_id() + "' but the manifest says '" +
                        e.family_id + "'");
    }
  }
  return out;
}

}  // namespace poscl
