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
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "text2scene/error.hpp"
#include "text2scene/scene_io.hpp"

using namespace text2scene;

TEST_CASE("scene files round trip for every task") {
  nn::Rng rng(1);
  for (TaskKind task : {TaskKind::kAbstract, TaskKind::kLayout, TaskKind::kComposite}) {
    const Vocabulary v = Vocabulary::for_task(task);
    SceneFile f;
    f.header = {task, "0123456789abcdef", 42};
    for (int i = 0; i < 4; ++i) {
      SceneRecord r;
      r.id = "s" + std::to_string(i);
      r.caption = "a caption number " + std::to_string(i);
      r.tokens = {"a", "caption"};
      r.truncated = i == 2;
      r.scene = testing::random_scene(task, v, i, rng);
      if (task == TaskKind::kComposite) {
        for (auto& t : r.scene.objects) {
          t.patch_id = 7 + i;
          t.appearance.assign(128, 0.0);
          t.appearance[3] = 1.0;
        }
        r.scene.source_size = ImageSize{640, 480};
      }
      f.records.push_back(r);
    }
    std::stringstream io;
    write_scene_file(io, f, v);
    const SceneFile back = read_scene_file(io, v);
    CHECK(back.header.task == task);
    CHECK(back.header.config_hash == "0123456789abcdef");
    CHECK(back.header.seed == 42);
    REQUIRE(back.records.size() == f.records.size());
    for (std::size_t i = 0; i < f.records.size(); ++i) {
      CHECK(back.records[i].id == f.records[i].id);
      CHECK(back.records[i].caption == f.records[i].caption);
      CHECK(back.records[i].truncated == f.records[i].truncated);
      CHECK(back.records[i].scene == f.records[i].scene);
    }
  }
}

TEST_CASE("scene file errors name the problem") {
  const Vocabulary v = Vocabulary::for_task(TaskKind::kAbstract);
  std::stringstream empty;
  CHECK_THROWS_AS(read_scene_file(empty, v), Error);
  std::stringstream bad(std::string(serialize_header({TaskKind::kAbstract, "x", 1})) +
                        "\n{\"id\": 3}\n");
  CHECK_THROWS_AS(read_scene_file(bad, v), Error);
  std::stringstream wrong_version(
      "{\"format\":\"text2scene.scenes\",\"version\":99,\"task\":\"abstract\","
      "\"config_hash\":\"x\",\"seed\":1}\n");
  CHECK_THROWS_AS(read_scene_file(wrong_version, v), Error);
}

TEST_CASE("scene files on disk") {
  testing::TempDir dir;
  const Vocabulary v = Vocabulary::for_task(TaskKind::kLayout);
  SceneFile f;
  f.header = {TaskKind::kLayout, "abc", 3};
  write_scene_file(dir / "x.scn", f, v);
  CHECK(read_scene_file(dir / "x.scn").records.empty());
  CHECK_THROWS_AS(read_scene_file(dir / "none.scn"), Error);
}
