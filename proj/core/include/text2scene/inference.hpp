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
#pragma once

#include <cstdint>
#include <functional>
#include <istream>
#include <memory>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "text2scene/canvas.hpp"
#include "text2scene/image.hpp"
#include "text2scene/model.hpp"
#include "text2scene/patch_embedding.hpp"

namespace text2scene {

// 10 for abstract scenes, 20 for layouts and composites.
int default_max_objects(TaskKind task);

struct StepAttention {
  // Predicted object index, eos included.
  int object = 0;
  std::vector<double> object_attention;
  // Empty on the eos step.
  std::vector<double> attribute_attention;
};

struct Generation {
  Scene scene;
  bool truncated = false;
  std::vector<std::string> words;
  std::vector<StepAttention> steps;
  int attribute_calls = 0;
  // Canvas before each decoding step when GenerateOptions::keep_canvases.
  std::vector<CanvasTensor> canvases;
};

struct GenerateOptions {
  // Non-positive selects default_max_objects.
  int max_objects = 0;
  bool keep_canvases = false;
};

/// Greedy decoder. Composite generation also needs a patch index for
/// retrieval and a builder that owns the matching patch store.
class SceneGenerator {
 public:
  SceneGenerator(const Text2SceneModel& model, std::shared_ptr<const CanvasBuilder> builder,
                 std::shared_ptr<const PatchIndex> index = nullptr);

  Generation generate(std::string_view text, const GenerateOptions& options = {}) const;

 private:
  const Text2SceneModel& model_;
  std::shared_ptr<const CanvasBuilder> builder_;
  std::shared_ptr<const PatchIndex> index_;
};

struct LabeledBox {
  int category = 0;
  std::string label;
  // Pixel rectangle, inclusive corners.
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
};

struct PlacedPatch {
  std::int64_t patch_id = 0;
  std::int64_t source_image = 0;
};

struct Rendering {
  Image image;
  // Layout only: one entry per drawn rectangle.
  std::vector<LabeledBox> boxes;
  // Composite only: one entry per placed patch, in placement order.
  std::vector<PlacedPatch> provenance;
};

// Abstract scenes use the builder's sprite render; layouts draw outlined
// boxes on a width x height white image (the builder's canvas size when
// zero); composites flatten the patch canvas. Missing assets or patches
// raise render-error.
Rendering render_output(const Scene& scene, const CanvasBuilder& builder, int width = 0,
                        int height = 0);

// Attention dump: one JSON object per generated description.
struct AttentionRecord {
  std::string id;
  std::string caption;
  std::vector<std::string> words;
  std::vector<std::string> objects;  // step object names, eos included
  std::vector<StepAttention> steps;
};

AttentionRecord attention_record(const std::string& id, const std::string& caption,
                                 const Generation& generation, const Vocabulary& vocab);
void write_attention_record(std::ostream& out, const AttentionRecord& record);
std::vector<AttentionRecord> read_attention_dump(std::istream& in);

// Per-step table of the top_k attended words for both decoders.
void print_attention_table(std::ostream& out, const AttentionRecord& record, int top_k = 3);

}  // namespace text2scene
