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
// Binary checkpoints: magic, a JSON header (model configuration,
// vocabularies, parameter shapes, metadata) and the raw parameter values
// as little-endian doubles in registration order.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>

#include "text2scene/model.hpp"

namespace text2scene {

struct CheckpointMeta {
  std::string config_hash;
  std::uint64_t seed = 0;
  int epoch = -1;
  std::map<std::string, double> metrics;
  // Key-value snapshot of the full run configuration.
  std::string config_snapshot;
};

void save_checkpoint(const std::filesystem::path& path, const Text2SceneModel& model,
                     const CheckpointMeta& meta);

struct LoadedCheckpoint {
  std::unique_ptr<Text2SceneModel> model;
  CheckpointMeta meta;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace text2scene
