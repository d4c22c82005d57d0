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
// Object decoder (what to add next) and attribute decoder (where, and with
// which attributes). Both attend over the text features with a bilinear
// score s^T W d_i and pool the decoder state with a spatial softmax.

#pragma once

#include <array>
#include <string>
#include <vector>

#include "text2scene/autograd.hpp"
#include "text2scene/layers.hpp"
#include "text2scene/scene.hpp"
#include "text2scene/scene_state.hpp"
#include "text2scene/text_encoder.hpp"

namespace text2scene {

struct DecoderConfig {
  int vocab_size = 0;
  int hidden = 512;            // ConvGRU channels D
  int text_width = 812;        // 2 * text hidden + word dimension
  int attention_hidden = 256;  // Psi convs
  int object_hidden = 512;     // Theta^o hidden layer
  int query_embedding = 256;   // learned embedding of o_t for Phi^a
  std::array<int, 3> head_widths{512, 256, 256};
  GridSize grid;
  AttributeSpaces spaces;

  // Width of [u^o; c^o] (1324 at full sizes), to which Theta^o adds |V|.
  int pooled_context_width() const { return hidden + text_width; }
};

// Large negative logit given to sos and pad, which are never emitted.
inline constexpr double kMaskedLogit = -1e9;

struct ObjectPrediction {
  nn::Var probs;      // [|V|]
  nn::Var log_probs;  // [|V|]
  nn::Var pooled;     // u^o [D]
  nn::Var context;    // c^o [text width]
  nn::Var attention;  // alpha^o [M]
  nn::Var spatial;    // [1, rows, cols]
};

class ObjectDecoder {
 public:
  ObjectDecoder() = default;
  ObjectDecoder(nn::ParameterStore& store, const std::string& name, const DecoderConfig& config,
                nn::Rng& rng);

  ObjectPrediction step(const DecoderState& state, const TextFeatures& text) const;

  // Bilinear attention matrix [text width, D + |V|].
  const nn::Var& attention_weight() const { return attention_weight_; }

 private:
  DecoderConfig config_;
  nn::Conv2d psi1_;
  nn::Conv2d psi2_;
  nn::Var attention_weight_;
  nn::Linear theta1_;
  nn::Linear theta2_;
};

/// Raw Theta^a output plus the attention used to produce it.
struct AttributeOutput {
  nn::Var head;       // [1 + sum |R^k| + appearance, rows, cols]
  nn::Var attention;  // alpha^a [M]
  nn::Var spatial;    // [1, rows, cols]
  nn::Var context;    // c^a [text width]
};

struct AttributePrediction {
  nn::Var location;                 // [1, rows, cols], sums to 1
  std::vector<nn::Var> attributes;  // [|R^k|, rows, cols], per-cell distributions
  nn::Var appearance;               // [dim, rows, cols] unit columns, undefined if none
};

class AttributeDecoder {
 public:
  AttributeDecoder() = default;
  AttributeDecoder(nn::ParameterStore& store, const std::string& name,
                   const DecoderConfig& config, nn::Rng& rng);

  // Throws contract-violation when `object` is a special token.
  AttributeOutput step(const DecoderState& state, const TextFeatures& text, int object) const;

  int head_channels() const { return config_.spaces.head_channels(); }

 private:
  DecoderConfig config_;
  nn::Linear query_;
  nn::Var attention_weight_;
  nn::Conv2d psi1_;
  nn::Conv2d psi2_;
  std::vector<nn::Conv2d> head_;
};

AttributePrediction predict_attributes(const AttributeOutput& output,
                                       const AttributeSpaces& spaces);

// Channel offset of discrete attribute k inside the head.
int attribute_offset(const AttributeSpaces& spaces, std::size_t k);
int appearance_offset(const AttributeSpaces& spaces);

struct SelectedAttributes {
  std::vector<int> attributes;
  std::vector<double> appearance;
};

// Argmax of every attribute distribution at the cell; ties go to the
// smaller index.
SelectedAttributes select_at_location(const AttributePrediction& prediction, Cell cell);

// Position of the largest entry within the strided range, first on ties.
int argmax(const std::vector<double>& values, std::size_t begin = 0, std::size_t end = 0,
           std::size_t stride = 1);
Cell argmax_cell(const nn::Var& location);

nn::Var one_hot(int index, int size);

}  // namespace text2scene
