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
// Canvas encoders (Omega) and the convolutional recurrent decoder state.

#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "text2scene/autograd.hpp"
#include "text2scene/layers.hpp"
#include "text2scene/scene.hpp"

namespace text2scene {

/// Maps a canvas tensor [C_in, H_in, W_in] to a feature map on the task
/// grid [channels(), rows, cols]. External pretrained backbones plug in
/// here; their parameters are simply not registered as trainable.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual int channels() const = 0;
  virtual nn::Var operator()(const nn::Var& canvas) const = 0;
};

/// Four 3x3 convolutions (stride 2, 2, 1, 1) with ReLU, resized to the grid
/// when the strided output does not already match it.
class SmallCnnExtractor final : public FeatureExtractor {
 public:
  SmallCnnExtractor(nn::ParameterStore& store, const std::string& name, int in_channels,
                    std::array<int, 4> widths, GridSize grid, nn::Rng& rng);
  int channels() const override { return widths_[3]; }
  nn::Var operator()(const nn::Var& canvas) const override;

 private:
  std::array<int, 4> widths_;
  GridSize grid_;
  std::vector<nn::Conv2d> convs_;
};

struct ResidualEncoderSpec {
  int in_channels = 0;
  int first_channels = 0;
  int first_kernel = 7;
  int first_stride = 2;
  int first_groups = 1;
  // (output channels, stride) per residual block.
  std::vector<std::pair<int, int>> stages;
  nn::Activation activation = nn::Activation::kRelu;
  GridSize grid;
};

// conv7x7/2 |V|->128, Residual(128, /1), Residual(256, /2), resize to 28x28.
// `width_scale` shrinks the 128/256 widths for desk-scale models.
ResidualEncoderSpec layout_encoder_spec(int vocab_size, double width_scale = 1.0);
// Grouped conv7x7/2 3|V|->|V| (one output per category triple), then
// residual blocks (|V|,1) (2|V|,1) (2|V|,1) (3|V|,2) (3|V|,1) (4|V|,1).
ResidualEncoderSpec composite_encoder_spec(int vocab_size);

class ResidualCanvasEncoder final : public FeatureExtractor {
 public:
  ResidualCanvasEncoder(nn::ParameterStore& store, const std::string& name,
                        ResidualEncoderSpec spec, nn::Rng& rng);
  int channels() const override;
  nn::Var operator()(const nn::Var& canvas) const override;
  const ResidualEncoderSpec& spec() const { return spec_; }

 private:
  ResidualEncoderSpec spec_;
  nn::Conv2d first_;
  std::vector<nn::ResidualBlock> blocks_;
};

// Checks the canvas shape, runs the extractor and checks that the result
// lies on the task grid.
nn::Var encode_canvas(const FeatureExtractor& encoder, const nn::Var& canvas,
                      const nn::Shape& expected_input, GridSize grid);

struct DecoderState {
  nn::Var hidden;  // [D, rows, cols]
  int previous_object = 0;
};

/// Projects the text encoder's final state to the decoder width (identity
/// when the widths agree) and replicates it over the grid.
class HiddenInitializer {
 public:
  HiddenInitializer() = default;
  HiddenInitializer(nn::ParameterStore& store, const std::string& name, int text_width,
                    int hidden_channels, nn::Rng& rng);
  nn::Var operator()(const nn::Var& last_hidden, GridSize grid) const;
  bool is_identity() const { return !projection_.weight.defined(); }

 private:
  nn::Linear projection_;
};

nn::Var conv_gru_step(const nn::ConvGruCell& cell, const nn::Var& features, const nn::Var& h_prev);

}  // namespace text2scene
