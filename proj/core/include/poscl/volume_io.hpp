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

#include <filesystem>
#include <string>
#include <vector>

#include "poscl/volume.hpp"

namespace poscl {

// "VVOL v1": one line of JSON header, then little-endian float32 intensities
// (x fastest), then little-endian uint16 labels when has_labels is set.

std::string encode_vvol(const Volume& v);
Volume decode_vvol(const std::string& bytes);

void write_vvol(const std::filesystem::path& path, const Volume& v);
Volume read_vvol(const std::filesystem::path& path);

enum class Split { kPretrain, kLabeled, kTest };

std::string to_string(Split s);
Split parse_split(const std::string& s);

struct ManifestEntry {
  std::string path;  // relative paths resolve against the manifest's directory
  std::string family_id;
  Split split = Split::kLabeled;
};

/// JSON list of {path, family_id, split}.
struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const ManifestEntry& e) const;
  std::vector<ManifestEntry> with_split(Split s) const;
};

DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

/// Loads the referenced volumes, checking each header's family_id against the entry.
std::vector<Volume> load_volumes(const DatasetManifest& manifest, const std::vector<ManifestEntry>& entries);

}  // namespace poscl
