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
// Foreground patch embeddings for retrieval-based compositing.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "text2scene/autograd.hpp"
#include "text2scene/layers.hpp"
#include "text2scene/patch.hpp"
#include "text2scene/scene.hpp"

namespace text2scene {

inline constexpr int kPatchInputSize = 64;
inline constexpr int kPatchEmbeddingDim = 128;

/// Pretrained image descriptor of P_color (2048-d in the reference setup).
/// The default embedding net feeds zeros when none is supplied.
class PatchFeatureSource {
 public:
  virtual ~PatchFeatureSource() = default;
  virtual int dim() const = 0;
  virtual std::vector<double> features(const PatchRecord& patch) const = 0;
};

struct EmbeddingNetConfig {
  // Five 2x2 stride-2 convolutions, 64 -> 2 pixels.
  std::array<int, 5> widths{64, 128, 256, 256, 256};
  int descriptor_dim = 2048;
  int output_dim = kPatchEmbeddingDim;
};

// [|V| + 4, 64, 64] network input: one-hot context, RGB color, mask.
nn::Var patch_input(const PatchRecord& patch, int vocab_size);

class EmbeddingNet {
 public:
  EmbeddingNet() = default;
  EmbeddingNet(nn::ParameterStore& store, const std::string& name, int vocab_size,
               EmbeddingNetConfig config, nn::Rng& rng);

  void set_feature_source(std::shared_ptr<const PatchFeatureSource> source);

  // Unit-norm F for a patch.
  nn::Var operator()(const PatchRecord& patch) const;
  nn::Var embed_input(const nn::Var& input, const std::vector<double>& descriptor) const;

  int vocab_size() const { return vocab_size_; }
  const EmbeddingNetConfig& config() const { return config_; }

 private:
  int vocab_size_ = 0;
  EmbeddingNetConfig config_;
  std::vector<nn::Conv2d> trunk_;
  nn::Linear fusion_;
  std::shared_ptr<const PatchFeatureSource> source_;
};

std::vector<double> embed_patch(const EmbeddingNet& net, const PatchRecord& patch);

// max(||q - pos|| - ||q - neg|| + margin, 0)
nn::Var triplet_loss(const nn::Var& query, const nn::Var& positive, const nn::Var& negative,
                     double margin);

/// Per-category (id, vector) lists with exact linear-scan lookup.
class PatchIndex {
 public:
  static constexpr int kVersion = 1;

  void add(std::int64_t id, int category, std::vector<double> vector);
  bool contains(std::int64_t id) const { return category_of_.count(id) != 0; }
  std::size_t size() const { return category_of_.size(); }
  int dim() const { return dim_; }
  std::vector<std::int64_t> ids_in_category(int category) const;
  const std::vector<double>& vector(std::int64_t id) const;
  int category(std::int64_t id) const;

  // Euclidean nearest neighbor; ties go to the smallest id. Throws
  // retrieval-miss when the category is empty.
  std::int64_t retrieve(const std::vector<double>& query, int category) const;

  // Uniform draw over the category without `exclude`; throws
  // no-negative-available when nothing else is in the category.
  std::int64_t sample_negative(int category, std::int64_t exclude, nn::Rng& rng) const;

  // Text file: a versioned header, then "id<TAB>category<TAB>v1 v2 ..." rows.
  void save(const std::filesystem::path& path, const Vocabulary& vocab) const;
  static PatchIndex load(const std::filesystem::path& path, const Vocabulary& vocab);

 private:
  int dim_ = 0;
  std::map<int, std::map<std::int64_t, std::vector<double>>> by_category_;
  std::map<std::int64_t, int> category_of_;
};

PatchIndex build_patch_index(const EmbeddingNet& net, const PatchStore& patches);

// Draws a negative from the patch store directly.
const PatchRecord& sample_negative(const PatchStore& patches, int category, std::int64_t exclude,
                                   nn::Rng& rng);

}  // namespace text2scene
