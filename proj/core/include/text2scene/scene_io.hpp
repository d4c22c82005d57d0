// Copyright 2026 The Text2Scene Authors.
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
// Line-delimited scene files. The first line is a header record:
//
//   {"format":"text2scene.scenes","version":1,"task":"layout",
//    "config_hash":"...","seed":7}
//
// followed by one JSON record per scene with the caption, its tokens and
// the objects (category name, cell, normalized center, named attributes).

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "text2scene/scene.hpp"

namespace text2scene {

inline constexpr int kSceneFileVersion = 1;

struct SceneFileHeader {
  TaskKind task = TaskKind::kAbstract;
  std::string config_hash;
  std::uint64_t seed = 0;
};

struct SceneRecord {
  std::string id;
  std::string caption;
  std::vector<std::string> tokens;
  bool truncated = false;
  Scene scene;
};

struct SceneFile {
  SceneFileHeader header;
  std::vector<SceneRecord> records;
};

std::string serialize_header(const SceneFileHeader& header);
std::string serialize_record(const SceneRecord& record, const Vocabulary& vocab);
SceneRecord parse_record(const std::string& line, TaskKind task, const Vocabulary& vocab);

void write_scene_file(std::ostream& out, const SceneFile& file, const Vocabulary& vocab);
void write_scene_file(const std::filesystem::path& path, const SceneFile& file,
                      const Vocabulary& vocab);
SceneFile read_scene_file(std::istream& in, const Vocabulary& vocab,
                          const std::string& origin = "<stream>");
SceneFile read_scene_file(const std::filesystem::path& path, const Vocabulary& vocab);
// Uses the task's standard vocabulary.
SceneFile read_scene_file(const std::filesystem::path& path);

}  // namespace text2scene
