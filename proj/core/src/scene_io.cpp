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
#include "text2scene/scene_io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "text2scene/error.hpp"

namespace text2scene {

using nlohmann::json;

std::string serialize_header(const SceneFileHeader& header) {
  json j;
  j["format"] = "text2scene.scenes";
  j["version"] = kSceneFileVersion;
  j["task"] = std::string(to_string(header.task));
  j["config_hash"] = header.config_hash;
  j["seed"] = header.seed;
  return j.dump();
}

std::string serialize_record(const SceneRecord& record, const Vocabulary& vocab) {
  const auto& scene = record.scene;
  const auto spaces = AttributeSpaces::for_task(scene.task);
  const GridSize grid = grid_size(scene.task);
  json j;
  j["id"] = record.id;
  j["caption"] = record.caption;
  j["tokens"] = record.tokens;
  j["truncated"] = record.truncated;
  if (scene.source_size) {
    j["source_size"] = {scene.source_size->width, scene.source_size->height};
  } else {
    j["source_size"] = nullptr;
  }
  json objects = json::array();
  for (const auto& o : scene.objects) {
    const Point2 c = continuize_location(o.cell, grid);
    json jo;
    jo["category"] = vocab.name(o.category);
    jo["row"] = o.cell.row;
    jo["col"] = o.cell.col;
    jo["x"] = c.x;
    jo["y"] = c.y;
    json attrs = json::object();
    for (std::size_t k = 0; k < o.attributes.size() && k < spaces.discrete.size(); ++k) {
      attrs[spaces.discrete[k].name] = o.attributes[k];
    }
    jo["attributes"] = attrs;
    if (!o.appearance.empty()) jo["appearance"] = o.appearance;
    if (o.patch_id) jo["patch"] = *o.patch_id;
    objects.push_back(std::move(jo));
  }
  j["objects"] = std::move(objects);
  return j.dump();
}

SceneRecord parse_record(const std::string& line, TaskKind task, const Vocabulary& vocab) {
  const auto spaces = AttributeSpaces::for_task(task);
  const GridSize grid = grid_size(task);
  SceneRecord r;
  try {
    const json j = json::parse(line);
    r.id = j.at("id").get<std::string>();
    r.caption = j.value("caption", std::string());
    r.tokens = j.value("tokens", std::vector<std::string>{});
    r.truncated = j.value("truncated", false);
    r.scene.task = task;
    if (j.contains("source_size") && !j["source_size"].is_null()) {
      r.scene.source_size = ImageSize{j["source_size"].at(0).get<int>(),
                                      j["source_size"].at(1).get<int>()};
    }
    for (const auto& jo : j.at("objects")) {
      ObjectToken t;
      const std::string name = jo.at("category").get<std::string>();
      const auto cat = vocab.find(name);
      require(cat.has_value(), ErrorCode::kParseError, "unknown category '" + name + "'");
      t.category = *cat;
      if (jo.contains("row") && jo.contains("col")) {
        t.cell = {jo["row"].get<int>(), jo["col"].get<int>()};
      } else {
        t.cell = discretize_location({jo.at("x").get<double>(), jo.at("y").get<double>()}, grid);
      }
      t.attributes.assign(spaces.discrete.size(), 0);
      const json attrs = jo.value("attributes", json::object());
      for (auto it = attrs.begin(); it != attrs.end(); ++it) {
        const auto k = spaces.index_of(it.key());
        require(k.has_value(), ErrorCode::kParseError, "unknown attribute '" + it.key() + "'");
        t.attributes[*k] = it.value().get<int>();
      }
      if (jo.contains("appearance")) t.appearance = jo["appearance"].get<std::vector<double>>();
      if (jo.contains("patch")) t.patch_id = jo["patch"].get<std::int64_t>();
      r.scene.objects.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kParseError, std::string("malformed scene record: ") + e.what());
  }
  validate(r.scene, vocab);
  return r;
}

void write_scene_file(std::ostream& out, const SceneFile& file, const Vocabulary& vocab) {
  out << serialize_header(file.header) << "\n";
  for (const auto& r : file.records) {
    require(r.scene.task == file.header.task, ErrorCode::kInvalidArgument,
            "record '" + r.id + "' has a different task than the file header");
    out << serialize_record(r, vocab) << "\n";
  }
}

void write_scene_file(const std::filesystem::path& path, const SceneFile& file,
                      const Vocabulary& vocab) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  require(out.good(), ErrorCode::kIoError, "cannot write " + path.string());
  write_scene_file(out, file, vocab);
  require(out.good(), ErrorCode::kIoError, "write failed: " + path.string());
}

namespace {

SceneFileHeader parse_header(const std::string& line, const std::string& origin) {
  SceneFileHeader h;
  try {
    const json j = json::parse(line);
    require(j.value("format", std::string()) == "text2scene.scenes", ErrorCode::kParseError,
            origin + ": not a scene file");
    const int version = j.at("version").get<int>();
    require(version == kSceneFileVersion, ErrorCode::kParseError,
            origin + ": unsupported scene file version " + std::to_string(version));
    h.task = parse_task(j.at("task").get<std::string>());
    h.config_hash = j.value("config_hash", std::string());
    h.seed = j.value("seed", std::uint64_t{0});
  } catch (const json::exception& e) {
    fail(ErrorCode::kParseError, origin + ":1: malformed header: " + e.what());
  }
  return h;
}

}  // namespace

SceneFile read_scene_file(std::istream& in, const Vocabulary& vocab, const std::string& origin) {
  SceneFile f;
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorCode::kParseError,
          origin + ": empty scene file");
  f.header = parse_header(line, origin);
  require(vocab.task() == f.header.task, ErrorCode::kInvalidArgument,
          origin + ": vocabulary task does not match file task");
  int number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      f.records.push_back(parse_record(line, f.header.task, vocab));
    } catch (const Error& e) {
      fail(e.code(), origin + ":" + std::to_string(number) + ": " + e.what());
    }
  }
  return f;
}

SceneFile read_scene_file(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::kIoError, "cannot open " + path.string());
  return read_scene_file(in, vocab, path.string());
}

SceneFile read_scene_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::kIoError, "cannot open " + path.string());
  std::string first;
  std::getline(in, first);
  const auto header = parse_header(first, path.string());
  return read_scene_file(path, Vocabulary::for_task(header.task));
}

}  // namespace text2scene
