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


#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstring>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "poscl/errors.hpp"
#include "poscl/volume_io.hpp"

using namespace poscl;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("poscl_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("vvol layout") {
  Volume v({2, 1, 2}, {1.5, 1, 2}, {1.0f, -2.0f, 0.5f, 3.25f}, std::vector<std::uint16_t>{0, 1, 1, 0}, 2, "tiny",
           "A");
  const auto bytes = encode_vvol(v);
  const auto nl = bytes.find('\n');
  REQUIRE(nl != std::string::npos);
  auto header = nlohmann::json::parse(bytes.substr(0, nl));
  CHECK(header["magic"] == "VVOL");
  CHECK(header["version"] == 1);
  CHECK(header["dims"] == nlohmann::json::array({2, 1, 2}));
  CHECK(header["has_labels"] == true);
  CHECK(header["num_classes"] == 2);
  CHECK(bytes.size() == nl + 1 + 4 * 4 + 4 * 2);
  // little-endian float32 payload, x fastest
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + nl + 1);
  float second;
  const unsigned char le[4] = {p[4], p[5], p[6], p[7]};
  std::memcpy(&second, le, 4);
  CHECK(second == -2.0f);
  CHECK(p[16 + 2] == 1);
  CHECK(p[16 + 3] == 0);
}

TEST_CASE("vvol round trip is bit exact") {
  for (const auto& fam : {default_family_a(), default_family_b()}) {
    auto v = generate_synthetic_volume(fam, 12, "vol-12");
    CHECK(decode_vvol(encode_vvol(v)) == v);
    auto unlabeled = v.without_labels();
    CHECK(decode_vvol(encode_vvol(unlabeled)) == unlabeled);
    auto dir = scratch_dir("rt" + fam.family_id);
    write_vvol(dir / "v.vvol", v);
    CHECK(read_vvol(dir / "v.vvol") == v);
    CHECK(encode_vvol(read_vvol(dir / "v.vvol")) == encode_vvol(v));
  }
}

TEST_CASE("vvol rejects malformed input") {
  auto v = generate_synthetic_volume(default_family_a(), 1);
  auto bytes = encode_vvol(v);
  CHECK_THROWS_AS(decode_vvol(bytes.substr(0, bytes.size() - 1)), FormatError);
  CHECK_THROWS_AS(decode_vvol(bytes + "x"), FormatError);
  CHECK_THROWS_AS(decode_vvol("not json\n"), FormatError);
  CHECK_THROWS_AS(decode_vvol(""), FormatError);
  auto bad_magic = bytes;
  bad_magic.replace(bad_magic.find("VVOL"), 4, "XXXX");
  CHECK_THROWS_AS(decode_vvol(bad_magic), FormatError);
  CHECK_THROWS_AS(read_vvol("/nonexistent/poscl.vvol"), Error);
}

TEST_CASE("manifest round trip and validation") {
  auto dir = scratch_dir("manifest");
  DatasetManifest m;
  for (int i = 0; i < 3; ++i) {
    const std::string name = "v" + std::to_string(i) + ".vvol";
    write_vvol(dir / name, generate_synthetic_volume(default_family_a(), i, name));
    m.entries.push_back({name, "A", i == 0 ? Split::kPretrain : (i == 1 ? Split::kLabeled : Split::kTest)});
  }
  save_manifest(dir / "manifest.json", m);
  auto loaded = load_manifest(dir / "manifest.json");
  REQUIRE(loaded.entries.size() == 3);
  CHECK(loaded.entries[1].split == Split::kLabeled);
  CHECK(loaded.with_split(Split::kTest).size() == 1);
  auto vols = load_volumes(loaded, loaded.entries);
  CHECK(vols[2] == generate_synthetic_volume(default_family_a(), 2, "v2.vvol"));

  CHECK(parse_split("labeled-pool") == Split::kLabeled);
  CHECK(parse_split(to_string(Split::kPretrain)) == Split::kPretrain);
  CHECK_THROWS_AS(parse_split("validation"), ConfigError);

  auto write = [&](const nlohmann::json& j) {
    std::ofstream(dir / "bad.json") << j.dump();
    return dir / "bad.json";
  };
  CHECK_THROWS_AS(load_manifest(write(nlohmann::json::array({{{"path", "v0.vvol"}, {"family_id", "A"}, {"split", "test"}},
                                                             {{"path", "v0.vvol"}, {"family_id", "A"}, {"split", "test"}}}))),
                  ConfigError);
  CHECK_THROWS_AS(load_manifest(write(nlohmann::json::array({{{"path", "missing.vvol"}, {"family_id", "A"}, {"split", "test"}}}))),
                  ConfigError);
  CHECK_THROWS_AS(load_manifest(dir / "absent.json"), ConfigError);
}
