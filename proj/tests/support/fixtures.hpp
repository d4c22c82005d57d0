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
// Synthetic data shared by the unit tests, the acceptance suite and the
// benchmarks.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "text2scene/datasets.hpp"
#include "text2scene/layers.hpp"
#include "text2scene/patch.hpp"
#include "text2scene/scene.hpp"

namespace text2scene::testing {

/// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t2s");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

struct AbstractFixtureOptions {
  int scenes = 32;
  int min_objects = 2;
  int max_objects = 4;
  std::uint64_t seed = 7;
  // Scenes are split across this many Scenes_*.txt tables.
  int tables = 1;
};

// Writes Scenes_fixture*.txt and SimpleSentences_fixture.txt in the
// Abstract Scenes text format. Every caption names each object (persons
// with pose and expression words) so scenes are recoverable from text.
void write_abstract_fixture(const std::filesystem::path& dir, const AbstractFixtureOptions& options);

// Writes the fixture to a scratch directory and parses it back.
std::vector<TrainingExample> abstract_fixture(const AbstractFixtureOptions& options = {});

// Clip-art categories the fixture draws from.
const std::vector<std::string>& fixture_categories();

// Random scene with valid tokens for any task.
Scene random_scene(TaskKind task, const Vocabulary& vocab, int objects, nn::Rng& rng);

// Patch with a random color block, an elliptical mask and a stuff context.
PatchRecord synthetic_patch(std::int64_t id, int category, std::int64_t source_image,
                            const Vocabulary& vocab, nn::Rng& rng, int size = 24);

// `count` patches spread round-robin over the given categories.
PatchStore synthetic_patch_store(int count, const std::vector<int>& categories,
                                 const Vocabulary& vocab, std::uint64_t seed);

}  // namespace text2scene::testing
