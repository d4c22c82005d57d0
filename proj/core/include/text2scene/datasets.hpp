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
// Corpus ingestion: Abstract Scenes text tables, COCO-style JSON
// annotations, and the segmented patch database used for compositing.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "text2scene/image.hpp"
#include "text2scene/patch.hpp"
#include "text2scene/scene.hpp"
#include "text2scene/text_encoder.hpp"

namespace text2scene {

struct TrainingExample {
  std::string id;
  std::string caption;
  Scene scene;
  // Groups captions of the same source image (COCO) or scene (abstract).
  std::int64_t source_image = 0;
};

/// Indices into an example list.
struct SplitSpec {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

// Assigns the first n - val - test examples to train, then val, then test.
SplitSpec sequential_split(std::size_t n, std::size_t val, std::size_t test);

// Abstract Scenes proportions: 1000 test and 497 validation per 9997.
SplitSpec abstract_split(std::size_t n);

// Holds out every example of the last `val_images` distinct source images
// (in first-appearance order) for validation; nothing goes to test.
SplitSpec holdout_images(const std::vector<TrainingExample>& examples, std::size_t val_images);

struct AbstractCorpus {
  std::vector<TrainingExample> examples;
  SplitSpec split;
  std::size_t dropped_empty = 0;
};

/// Reads Scenes_*.txt and SimpleSentences*.txt from `dir` (searched
/// recursively). Scenes without clip-art or without sentences are dropped;
/// the sentences of a scene are joined in file order.
AbstractCorpus parse_abstract(const std::filesystem::path& dir);

struct LayoutCorpus {
  std::vector<TrainingExample> examples;
  std::vector<std::string> warnings;
};

/// COCO instances + captions. `captions` may equal `instances` when both
/// live in one file. One example per caption.
LayoutCorpus parse_layout(const std::filesystem::path& instances,
                          const std::filesystem::path& captions);
LayoutCorpus parse_layout_json(const std::string& instances_json,
                               const std::string& captions_json);

// Patch database --------------------------------------------------------

struct InstanceMask {
  int category = 0;  // vocabulary index
  Image mask;        // 1 channel, full image size, nonzero = inside
};

struct PatchSourceImage {
  std::int64_t id = 0;
  Image color;         // RGB
  Image stuff_labels;  // 1 channel vocabulary indices of stuff categories, 0 = none
  std::vector<InstanceMask> instances;
};

struct PatchDbResult {
  std::vector<PatchRecord> records;
  std::vector<std::string> warnings;
};

inline constexpr int kMinSegmentPixels = 16;

/// One record per instance and per 4-connected stuff component. Context
/// boxes extend the segment box by half its size on every side, clipped to
/// the image. Ids are assigned in (image, instance..., stuff...) order
/// starting at `first_id`.
PatchDbResult build_patch_db(const std::vector<PatchSourceImage>& images, const Vocabulary& vocab,
                             std::int64_t first_id = 0);

// Directory layout: index.tsv plus patches/<id>_{color,mask,context}.png.
void write_patch_db(const std::filesystem::path& dir, const std::vector<PatchRecord>& records,
                    const Vocabulary& vocab);
PatchStore read_patch_db(const std::filesystem::path& dir, const Vocabulary& vocab);

/// Composite training examples: one per caption of every source image that
/// has patches, with the image's patches as the target objects.
std::vector<TrainingExample> composite_examples(
    const PatchStore& patches, const std::map<std::int64_t, ImageSize>& image_sizes,
    const std::map<std::int64_t, std::vector<std::string>>& captions, const Vocabulary& vocab);

// Every caption word of the examples, in first-seen order after <unk>.
WordVocabulary caption_vocabulary(const std::vector<TrainingExample>& examples);

}  // namespace text2scene
