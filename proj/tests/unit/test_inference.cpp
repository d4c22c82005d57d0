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
#include "text2scene/inference.hpp"

using namespace text2scene;

namespace {

struct Rig {
  explicit Rig(TaskKind task, std::uint64_t seed = 4)
      : model(ModelConfig::compact(task), Vocabulary::for_task(task),
              WordVocabulary({"a", "dog", "sits", "under", "the", "tree"}), seed) {
    auto b = std::make_shared<CanvasBuilder>(task, model.vocab(), model.config().canvas);
    if (task == TaskKind::kAbstract) {
      b->set_assets(std::make_shared<AssetLibrary>(AssetLibrary::synthetic(model.vocab())));
    }
    if (task == TaskKind::kComposite) {
      const int dog = model.vocab().index("dog"), sky = model.vocab().index("sky");
      patches = std::make_shared<PatchStore>(testing::synthetic_patch_store(8, {dog, sky}, model.vocab(), 3));
      b->set_patches(patches);
      auto idx = std::make_shared<PatchIndex>();
      nn::Rng rng(6);
      std::normal_distribution<double> d;
      for (auto id : patches->ids()) {
        std::vector<double> v(kPatchEmbeddingDim);
        for (auto& x : v) x = d(rng);
        idx->add(id, patches->get(id).category, v);
      }
      index = idx;
    }
    builder = b;
  }

  // Makes the object decoder emit `category` at every step.
  void force(int category) {
    auto bias = model.parameters().find("object.theta2.bias");
    REQUIRE(bias.has_value());
    bias->mutable_value()[category] = 1e4;
  }

  SceneGenerator generator() const { return SceneGenerator(model, builder, index); }

  Text2SceneModel model;
  std::shared_ptr<PatchStore> patches;
  std::shared_ptr<const PatchIndex> index;
  std::shared_ptr<const CanvasBuilder> builder;
};

}  // namespace

TEST_CASE("default object caps") {
  CHECK(default_max_objects(TaskKind::kAbstract) == 10);
  CHECK(default_max_objects(TaskKind::kLayout) == 20);
  CHECK(default_max_objects(TaskKind::kComposite) == 20);
}

TEST_CASE("eos at the first step gives an empty scene") {
  Rig rig(TaskKind::kAbstract);
  rig.force(Vocabulary::kEos);
  const Generation g = rig.generator().generate("a dog sits under the tree");
  CHECK(g.scene.objects.empty());
  CHECK(g.attribute_calls == 0);
  REQUIRE(g.steps.size() == 1);
  CHECK(g.steps[0].object == Vocabulary::kEos);
  CHECK(g.steps[0].attribute_attention.empty());
  CHECK(!g.truncated);
}

TEST_CASE("the cap truncates and canvases are scene prefixes") {
  Rig rig(TaskKind::kAbstract);
  const int dog = rig.model.vocab().index("a_3");
  rig.force(dog);
  GenerateOptions opts;
  opts.max_objects = 4;
  opts.keep_canvases = true;
  const Generation g = rig.generator().generate("a dog", opts);
  CHECK(g.truncated);
  REQUIRE(g.scene.objects.size() == 4);
  CHECK(g.attribute_calls == 4);
  CHECK(g.words == std::vector<std::string>{"a", "dog"});
  REQUIRE(g.canvases.size() == 4);
  for (std::size_t t = 0; t < 4; ++t) {
    CHECK(g.canvases[t].data == rig.builder->build(g.scene, t).tensor.data);
  }
  for (const auto& o : g.scene.objects) {
    CHECK(o.category == dog);
    // Pose and expression do not apply to animals.
    CHECK(o.attributes[2] == 0);
    CHECK(o.attributes[3] == 0);
  }
  CHECK_NOTHROW(validate(g.scene, rig.model.vocab()));
}

TEST_CASE("generation is deterministic") {
  Rig a(TaskKind::kLayout, 9), b(TaskKind::kLayout, 9);
  GenerateOptions opts;
  opts.max_objects = 5;
  const Generation ga = a.generator().generate("the dog sits under a tree", opts);
  const Generation gb = b.generator().generate("the dog sits under a tree", opts);
  CHECK(ga.scene == gb.scene);
  REQUIRE(ga.steps.size() == gb.steps.size());
  for (std::size_t i = 0; i < ga.steps.size(); ++i) {
    CHECK(ga.steps[i].object_attention == gb.steps[i].object_attention);
  }
}

TEST_CASE("layout rendering draws one box per object") {
  Rig rig(TaskKind::kLayout);
  Scene s{TaskKind::kLayout, {}, {}};
  s.objects.push_back(ObjectToken{rig.model.vocab().index("person"), {14, 7}, {8, 8}, {}, {}});
  s.objects.push_back(ObjectToken{rig.model.vocab().index("dog"), {20, 20}, {5, 10}, {}, {}});
  const Rendering r = render_output(s, *rig.builder, 256, 192);
  CHECK(r.image.width == 256);
  CHECK(r.image.height == 192);
  REQUIRE(r.boxes.size() == 2);
  CHECK(r.boxes[0].label == "person");
  CHECK(r.boxes[1].label == "dog");
  CHECK(r.boxes[0].x0 < r.boxes[0].x1);
  // Background stays white away from the boxes.
  CHECK(r.image.at(0, 0, 0) == 255);
}

TEST_CASE("composite generation retrieves patches and reports provenance") {
  Rig rig(TaskKind::kComposite);
  rig.force(rig.model.vocab().index("dog"));
  GenerateOptions opts;
  opts.max_objects = 3;
  const Generation g = rig.generator().generate("a dog", opts);
  REQUIRE(g.scene.objects.size() == 3);
  for (const auto& o : g.scene.objects) {
    REQUIRE(o.patch_id.has_value());
    CHECK(rig.patches->get(*o.patch_id).category == o.category);
    CHECK(o.appearance.size() == static_cast<std::size_t>(kPatchEmbeddingDim));
  }
  const Rendering r = render_output(g.scene, *rig.builder);
  REQUIRE(r.provenance.size() == 3);
  CHECK(r.provenance[0].patch_id == *g.scene.objects[0].patch_id);
  CHECK(r.image.channels == 3);
  CHECK_THROWS_AS(SceneGenerator(rig.model, rig.builder), Error);
}

TEST_CASE("rendering an unknown patch is a render error") {
  Rig rig(TaskKind::kComposite);
  Scene s{TaskKind::kComposite, {}, {}};
  s.objects.push_back(ObjectToken{rig.model.vocab().index("dog"), {3, 3}, {8, 8}, {}, 999});
  try {
    render_output(s, *rig.builder);
    FAIL("expected a render error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kRenderError);
  }
}

TEST_CASE("attention dumps round trip") {
  Rig rig(TaskKind::kAbstract);
  GenerateOptions opts;
  opts.max_objects = 2;
  const Generation g = rig.generator().generate("a dog sits", opts);
  const AttentionRecord rec = attention_record("x1", "a dog sits", g, rig.model.vocab());
  CHECK(rec.objects.size() == g.steps.size());
  std::stringstream io;
  write_attention_record(io, rec);
  write_attention_record(io, rec);
  const auto back = read_attention_dump(io);
  REQUIRE(back.size() == 2);
  CHECK(back[1].id == "x1");
  CHECK(back[0].words == rec.words);
  REQUIRE(back[0].steps.size() == rec.steps.size());
  for (std::size_t i = 0; i < rec.steps.size(); ++i) {
    for (std::size_t k = 0; k < rec.words.size(); ++k) {
      CHECK(back[0].steps[i].object_attention[k] ==
            doctest::Approx(rec.steps[i].object_attention[k]));
    }
  }
  std::ostringstream table;
  print_attention_table(table, rec, 2);
  CHECK(table.str().find("dog") != std::string::npos);

  std::stringstream bad(R"({"id":"y","caption":"c","words":["a"],"objects":["eos"],"steps":[{"object":2,"object_attention":[0.5,0.5],"attribute_attention":[]}]})");
  CHECK_THROWS_AS(read_attention_dump(bad), Error);
}
