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
#include "text2scene/checkpoint.hpp"
#include "text2scene/error.hpp"

using namespace text2scene;

TEST_CASE("checkpoints round trip every parameter and the metadata") {
  for (TaskKind task : {TaskKind::kAbstract, TaskKind::kLayout, TaskKind::kComposite}) {
    const Text2SceneModel model(ModelConfig::compact(task), Vocabulary::for_task(task),
                                WordVocabulary({"a", "red", "kite"}), 21);
    CheckpointMeta meta;
    meta.config_hash = "0011223344556677";
    meta.seed = 21;
    meta.epoch = 4;
    meta.metrics = {{"train_loss", 1.25}, {"val_loss", 2.5}};
    meta.config_snapshot = "task = abstract\n";
    testing::TempDir dir;
    save_checkpoint(dir / "m.ckpt", model, meta);
    CHECK(!std::filesystem::exists(dir / "m.ckpt.tmp"));
    const LoadedCheckpoint loaded = load_checkpoint(dir / "m.ckpt");
    CHECK(loaded.meta.config_hash == meta.config_hash);
    CHECK(loaded.meta.seed == 21);
    CHECK(loaded.meta.epoch == 4);
    CHECK(loaded.meta.metrics == meta.metrics);
    CHECK(loaded.meta.config_snapshot == meta.config_snapshot);
    CHECK(loaded.model->config().task == task);
    CHECK(loaded.model->words().words() == model.words().words());
    CHECK(loaded.model->vocab().size() == model.vocab().size());
    const auto& a = model.parameters().entries();
    const auto& b = loaded.model->parameters().entries();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].first == b[i].first);
      CHECK(a[i].second.value() == b[i].second.value());
      CHECK(model.parameters().is_trainable(a[i].first) ==
            loaded.model->parameters().is_trainable(b[i].first));
    }
  }
}

TEST_CASE("damaged checkpoints are rejected") {
  const Text2SceneModel model(ModelConfig::compact(TaskKind::kLayout),
                              Vocabulary::for_task(TaskKind::kLayout), WordVocabulary({"a"}), 1);
  testing::TempDir dir;
  save_checkpoint(dir / "m.ckpt", model, {});
  const auto size = std::filesystem::file_size(dir / "m.ckpt");
  std::filesystem::copy_file(dir / "m.ckpt", dir / "short.ckpt");
  std::filesystem::resize_file(dir / "short.ckpt", size - 8);
  const auto expect_parse_error = [](const std::filesystem::path& p) {
    try {
      load_checkpoint(p);
      FAIL("expected a parse error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kParseError);
    }
  };
  expect_parse_error(dir / "short.ckpt");
  std::ofstream(dir / "junk.ckpt") << "definitely not a checkpoint";
  expect_parse_error(dir / "junk.ckpt");
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.ckpt"), Error);
}
