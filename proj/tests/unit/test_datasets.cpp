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
#include <fstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "text2scene/datasets.hpp"
#include "text2scene/error.hpp"

using namespace text2scene;

TEST_CASE("split sizes") {
  const SplitSpec s = abstract_split(9997);
  CHECK(s.val.size() == 497);
  CHECK(s.test.size() == 1000);
  CHECK(s.train.size() == 8500);
  const SplitSpec q = sequential_split(10, 2, 3);
  CHECK(q.train.size() == 5);
  CHECK(q.val == std::vector<std::size_t>{5, 6});
  CHECK(q.test == std::vector<std::size_t>{7, 8, 9});
  CHECK_THROWS_AS(sequential_split(3, 2, 2), Error);
}

TEST_CASE("abstract corpus parsing") {
  testing::TempDir dir;
  std::ofstream(dir / "Scenes_10K.txt") << "3\n"
                                          "0 2\n"
                                          "hb0_12s.png 18 2 250 300 0 1\n"
                                          "s_3s.png 3 0 100 50 2 0\n"
                                          "1 0\n"
                                          "2 1\n"
                                          "t_4s.png 40 7 10 390 1 0\n";
  std::ofstream(dir / "SimpleSentences1_10020.txt") << "0\t0\tMike is sad.\n"
                                                     "0\t1\tThe sun is up.\n"
                                                     "2\t0\tA ball.\n";
  std::ofstream(dir / "SimpleSentences2_10020.txt") << "0\t0\tIgnored sentence.\n"
                                                     "1\t0\tNothing here.\n";
  const AbstractCorpus corpus = parse_abstract(dir.path());
  const Vocabulary v = Vocabulary::for_task(TaskKind::kAbstract);
  CHECK(corpus.dropped_empty == 1);
  REQUIRE(corpus.examples.size() == 2);
  const auto& e = corpus.examples[0];
  CHECK(e.id == "scene-0");
  CHECK(e.caption == "Mike is sad. The sun is up.");
  REQUIRE(e.scene.objects.size() == 2);
  // Lower objects come first.
  const ObjectToken& mike = e.scene.objects[0];
  CHECK(mike.category == v.index("hb0"));
  CHECK(mike.attributes == std::vector<int>{0, 1, 2, 2});
  CHECK(mike.cell == discretize_location({250 / 500.0, 300 / 400.0}, {28, 28}));
  CHECK(e.scene.objects[1].category == v.index("s_3"));
  CHECK(corpus.examples[1].scene.objects[0].attributes == std::vector<int>{1, 0, 0, 0});
}

TEST_CASE("abstract parse errors") {
  testing::TempDir dir;
  std::ofstream(dir / "SimpleSentences.txt") << "0\t0\thi\n";
  CHECK_THROWS_AS(parse_abstract(dir.path()), Error);
  std::ofstream(dir / "Scenes_a.txt") << "1\n0 1\nunknown.png 0 0 1 1 0 0\n";
  try {
    parse_abstract(dir.path());
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kParseError);
    CHECK(std::string(e.what()).find("Scenes_a.txt:3") != std::string::npos);
  }
}

TEST_CASE("the fixture writer produces parseable scenes") {
  const auto examples = testing::abstract_fixture({.scenes = 10, .seed = 3, .tables = 2});
  CHECK(examples.size() == 10);
  const Vocabulary v = Vocabulary::for_task(TaskKind::kAbstract);
  for (const auto& e : examples) {
    CHECK_NOTHROW(validate(e.scene, v));
    CHECK(e.scene.objects.size() >= 2);
  }
}

TEST_CASE("layout parsing") {
  const std::string inst = R"({
    "images": [{"id": 1, "width": 200, "height": 100}, {"id": 2, "width": 50, "height": 50}],
    "annotations": [
      {"image_id": 1, "category_id": 1, "bbox": [0, 50, 100, 50]},
      {"image_id": 1, "category_id": 18, "bbox": [150, 0, 50, 25]},
      {"image_id": 1, "category_id": 3, "bbox": [10, 10, 0, 5]}
    ]})";
  const std::string caps = R"({"annotations": [
      {"image_id": 1, "caption": "a person and a dog"},
      {"image_id": 1, "caption": "second caption"},
      {"image_id": 2, "caption": "empty image"}]})";
  const LayoutCorpus c = parse_layout_json(inst, caps);
  const Vocabulary v = Vocabulary::for_task(TaskKind::kLayout);
  REQUIRE(c.examples.size() == 2);
  CHECK(c.warnings.size() == 2);
  const Scene& s = c.examples[0].scene;
  REQUIRE(s.objects.size() == 2);
  CHECK(s.objects[0].category == v.index("person"));
  CHECK(s.objects[1].category == v.index("dog"));
  // person: 100x50 in a 200x100 image -> sqrt area fraction 0.5, aspect 2.
  CHECK(s.objects[0].attributes == std::vector<int>{size_bin(0.5), aspect_bin(2.0)});
  CHECK(c.examples[1].id == "coco-1-1");
  CHECK_THROWS_AS(parse_layout_json(R"({"images":[],"annotations":[{"image_id":1,"category_id":1,"bbox":[0,0,1,1]}]})", caps), Error);
  CHECK_THROWS_AS(parse_layout_json(inst, "{not json"), Error);
}

TEST_CASE("patch database: instances, stuff components and context") {
  const Vocabulary v = Vocabulary::for_task(TaskKind::kComposite);
  PatchSourceImage im;
  im.id = 5;
  im.color = Image(20, 10, 3, 40);
  im.stuff_labels = Image(20, 10, 1, 0);
  const int sky = v.index("sky"), ground = v.index("ground"), dog = v.index("dog");
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 20; ++x) im.stuff_labels.at(x, y, 0) = static_cast<std::uint8_t>(sky);
  }
  for (int y = 6; y < 10; ++y) {
    for (int x = 0; x < 8; ++x) im.stuff_labels.at(x, y, 0) = static_cast<std::uint8_t>(ground);
    for (int x = 12; x < 20; ++x) im.stuff_labels.at(x, y, 0) = static_cast<std::uint8_t>(ground);
  }
  im.stuff_labels.at(10, 8, 0) = static_cast<std::uint8_t>(ground);  // too small
  InstanceMask m{dog, Image(20, 10, 1, 0)};
  for (int y = 3; y < 8; ++y) {
    for (int x = 8; x < 12; ++x) m.mask.at(x, y, 0) = 1;
  }
  im.instances.push_back(m);
  const PatchDbResult db = build_patch_db({im}, v, 100);
  REQUIRE(db.records.size() == 4);
  CHECK(db.warnings.size() == 1);
  CHECK(db.records[0].category == dog);
  CHECK(db.records[0].id == 100);
  CHECK(db.records[0].box == PixelBox{8, 3, 12, 8});
  CHECK(db.records[0].context_box == PixelBox{6, 1, 14, 10});
  CHECK(db.records[0].mask_area() == 20);
  CHECK(db.records[1].category == sky);
  CHECK(db.records[2].category == ground);
  CHECK(db.records[2].box == PixelBox{0, 6, 8, 10});
  CHECK(db.records[3].box == PixelBox{12, 6, 20, 10});
  // Instances are painted over stuff in the context map.
  CHECK(db.records[1].context.at(9, 3, 0) == dog);

  testing::TempDir dir;
  write_patch_db(dir.path(), db.records, v);
  const PatchStore back = read_patch_db(dir.path(), v);
  CHECK(back.size() == 4);
  CHECK(back.get(101).context.pixels == db.records[1].context.pixels);
  CHECK(back.get(100).mask.pixels == db.records[0].mask.pixels);
  CHECK(back.ids_in_category(ground) == std::vector<std::int64_t>{102, 103});
}

TEST_CASE("composite examples from a patch store") {
  const Vocabulary v = Vocabulary::for_task(TaskKind::kComposite);
  const PatchStore store = testing::synthetic_patch_store(6, {v.index("cat"), v.index("sky")}, v, 4);
  std::map<std::int64_t, ImageSize> sizes;
  for (auto id : store.ids()) sizes[store.get(id).source_image] = {100, 100};
  std::map<std::int64_t, std::vector<std::string>> captions = {{100, {"a cat", "another cat"}},
                                                               {101, {"sky"}}};
  const auto examples = composite_examples(store, sizes, captions, v);
  CHECK(examples.size() == 3);
  for (const auto& e : examples) {
    for (const auto& t : e.scene.objects) CHECK(t.patch_id.has_value());
  }
}

TEST_CASE("caption vocabulary") {
  std::vector<TrainingExample> ex(2);
  ex[0].caption = "A dog, a cat.";
  ex[1].caption = "The dog's ball";
  const WordVocabulary w = caption_vocabulary(ex);
  CHECK(w.words() == std::vector<std::string>{"<unk>", "a", "dog", "cat", "the", "dogs", "ball"});
}
