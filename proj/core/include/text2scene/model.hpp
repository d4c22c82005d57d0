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

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "text2scene/canvas.hpp"
#include "text2scene/config.hpp"
#include "text2scene/decoders.hpp"
#include "text2scene/layers.hpp"
#include "text2scene/patch_embedding.hpp"
#include "text2scene/scene.hpp"
#include "text2scene/scene_state.hpp"
#include "text2scene/text_encoder.hpp"

namespace text2scene {

struct ModelConfig {
  TaskKind task = TaskKind::kAbstract;
  int word_dim = 300;
  int text_hidden = 256;
  int decoder_hidden = 512;
  int attention_hidden = 256;
  int object_hidden = 512;
  int query_embedding = 256;
  std::array<int, 3> head_widths{512, 256, 256};
  // Abstract canvas extractor (trainable fallback CNN).
  std::array<int, 4> extractor_widths{64, 128, 256, 256};
  // Layout encoder width multiplier on the 128/256 reference widths.
  double layout_width_scale = 1.0;
  EmbeddingNetConfig patch_net;
  CanvasSpec canvas;
  int max_tokens = kDefaultMaxTokens;
  bool train_word_embeddings = false;

  // Reference widths.
  static ModelConfig full(TaskKind task);
  // Small widths that train on one CPU core in minutes.
  static ModelConfig compact(TaskKind task);

  int text_width() const { return 2 * text_hidden + word_dim; }

  void write(KeyValues& kv, const std::string& prefix = "model.") const;
  static ModelConfig read(const KeyValues& kv, TaskKind task, const std::string& prefix = "model.");
};

/// All trainable modules of the generator, registered in one parameter
/// store in a fixed order.
class Text2SceneModel {
 public:
  Text2SceneModel(ModelConfig config, Vocabulary vocab, WordVocabulary words, std::uint64_t seed);
  Text2SceneModel(const Text2SceneModel&) = delete;
  Text2SceneModel& operator=(const Text2SceneModel&) = delete;

  const ModelConfig& config() const { return config_; }
  const Vocabulary& vocab() const { return vocab_; }
  const WordVocabulary& words() const { return words_; }
  const AttributeSpaces& spaces() const { return spaces_; }
  GridSize grid() const { return grid_; }
  nn::ParameterStore& parameters() { return store_; }
  const nn::ParameterStore& parameters() const { return store_; }

  TextEncoder& text_encoder() { return text_; }
  const TextEncoder& text_encoder() const { return text_; }
  const FeatureExtractor& canvas_encoder() const { return *canvas_encoder_; }
  const nn::ConvGruCell& conv_gru() const { return gru_; }
  const ObjectDecoder& object_decoder() const { return object_; }
  const AttributeDecoder& attribute_decoder() const { return attribute_; }
  const EmbeddingNet* patch_net() const { return patch_net_ ? &*patch_net_ : nullptr; }

  // Replaces the plug-in canvas extractor (abstract task). Its output
  // channel count must match the one the ConvGRU was built for.
  void set_canvas_extractor(std::shared_ptr<const FeatureExtractor> extractor);

  TokenSeq tokens(std::string_view text) const;
  TextFeatures encode_text(const std::vector<int>& ids) const;
  DecoderState initial_state(const TextFeatures& text) const;
  nn::Shape canvas_shape() const;
  // h_t = ConvGRU(Omega(B_t), h_{t-1}).
  nn::Var advance(const nn::Var& hidden, const CanvasTensor& canvas) const;

  DecoderConfig decoder_config() const;

 private:
  ModelConfig config_;
  Vocabulary vocab_;
  WordVocabulary words_;
  AttributeSpaces spaces_;
  GridSize grid_;
  nn::ParameterStore store_;
  TextEncoder text_;
  HiddenInitializer init_;
  std::shared_ptr<const FeatureExtractor> canvas_encoder_;
  nn::ConvGruCell gru_;
  ObjectDecoder object_;
  AttributeDecoder attribute_;
  std::optional<EmbeddingNet> patch_net_;
};

}  // namespace text2scene
