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
#include "text2scene/scene_state.hpp"

#include <cmath>

#include "text2scene/error.hpp"

namespace text2scene {

SmallCnnExtractor::SmallCnnExtractor(nn::ParameterStore& store, const std::string& name,
                                     int in_channels, std::array<int, 4> widths, GridSize grid,
                                     nn::Rng& rng)
    : widths_(widths), grid_(grid) {
  const int strides[4] = {2, 2, 1, 1};
  int in = in_channels;
  for (int i = 0; i < 4; ++i) {
    convs_.emplace_back(store, name + ".conv" + std::to_string(i + 1), in, widths[i], 3, rng,
                        strides[i], 1);
    in = widths[i];
  }
}

nn::Var SmallCnnExtractor::operator()(const nn::Var& canvas) const {
  nn::Var x = canvas;
  for (const auto& conv : convs_) x = nn::relu(conv(x));
  if (x.dim(1) != grid_.rows || x.dim(2) != grid_.cols) {
    x = nn::upsample_bilinear(x, grid_.rows, grid_.cols);
  }
  return x;
}

ResidualEncoderSpec layout_encoder_spec(int vocab_size, double width_scale) {
  const auto scaled = [width_scale](int c) {
    return std::max(1, static_cast<int>(std::lround(c * width_scale)));
  };
  ResidualEncoderSpec s;
  s.in_channels = vocab_size;
  s.first_channels = scaled(128);
  s.stages = {{scaled(128), 1}, {scaled(256), 2}};
  s.activation = nn::Activation::kRelu;
  s.grid = grid_size(TaskKind::kLayout);
  return s;
}

ResidualEncoderSpec composite_encoder_spec(int vocab_size) {
  const int v = vocab_size;
  ResidualEncoderSpec s;
  s.in_channels = 3 * v;
  s.first_channels = v;
  s.first_groups = v;
  s.stages = {{v, 1}, {2 * v, 1}, {2 * v, 1}, {3 * v, 2}, {3 * v, 1}, {4 * v, 1}};
  s.activation = nn::Activation::kLeakyRelu;
  s.grid = grid_size(TaskKind::kComposite);
  return s;
}

ResidualCanvasEncoder::ResidualCanvasEncoder(nn::ParameterStore& store, const std::string& name,
                                             ResidualEncoderSpec spec, nn::Rng& rng)
    : spec_(std::move(spec)),
      first_(store, name + ".conv1", spec_.in_channels, spec_.first_channels, spec_.first_kernel,
             rng, spec_.first_stride, spec_.first_kernel / 2, spec_.first_groups) {
  int in = spec_.first_channels;
  for (std::size_t i = 0; i < spec_.stages.size(); ++i) {
    const auto [out, stride] = spec_.stages[i];
    blocks_.emplace_back(store, name + ".res" + std::to_string(i + 1), in, out, stride,
                         spec_.activation, rng);
    in = out;
  }
}

int ResidualCanvasEncoder::channels() const {
  return spec_.stages.empty() ? spec_.first_channels : spec_.stages.back().first;
}

nn::Var ResidualCanvasEncoder::operator()(const nn::Var& canvas) const {
  nn::Var x = nn::activate(first_(canvas), spec_.activation);
  for (const auto& block : blocks_) x = block(x);
  if (x.dim(1) != spec_.grid.rows || x.dim(2) != spec_.grid.cols) {
    x = nn::upsample_bilinear(x, spec_.grid.rows, spec_.grid.cols);
  }
  return x;
}

nn::Var encode_canvas(const FeatureExtractor& encoder, const nn::Var& canvas,
                      const nn::Shape& expected_input, GridSize grid) {
  require(canvas.shape() == expected_input, ErrorCode::kInvalidArgument,
          "encode_canvas: canvas " + nn::shape_string(canvas.shape()) + ", expected " +
              nn::shape_string(expected_input));
  nn::Var out = encoder(canvas);
  require(out.rank() == 3 && out.dim(0) == encoder.channels() && out.dim(1) == grid.rows &&
              out.dim(2) == grid.cols,
          ErrorCode::kInvalidArgument,
          "encode_canvas: extractor produced " + nn::shape_string(out.shape()));
  return out;
}

HiddenInitializer::HiddenInitializer(nn::ParameterStore& store, const std::string& name,
                                     int text_width, int hidden_channels, nn::Rng& rng) {
  if (text_width != hidden_channels) {
    projection_ = nn::Linear(store, name, text_width, hidden_channels, rng);
  }
}

nn::Var HiddenInitializer::operator()(const nn::Var& last_hidden, GridSize grid) const {
  const nn::Var v = is_identity() ? last_hidden : nn::tanh(projection_(last_hidden));
  return nn::broadcast_spatial(v, grid.rows, grid.cols);
}

nn::Var conv_gru_step(const nn::ConvGruCell& cell, const nn::Var& features,
                      const nn::Var& h_prev) {
  return cell.step(features, h_prev);
}

}  // namespace text2scene
