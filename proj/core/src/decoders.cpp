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
#include "text2scene/decoders.hpp"

#include <cmath>

#include "text2scene/error.hpp"

namespace text2scene {

nn::Var one_hot(int index, int size) {
  require(index >= 0 && index < size, ErrorCode::kInvalidArgument, "one_hot index out of range");
  std::vector<double> v(size, 0.0);
  v[index] = 1.0;
  return nn::Var::constant({size}, std::move(v));
}

namespace {

// Spatial softmax of a [1, H, W] score map.
nn::Var spatial_softmax(const nn::Var& scores) {
  return nn::reshape(nn::softmax(scores), scores.shape());
}

// Bilinear attention over text rows: alpha = softmax(D W s), c = D^T alpha.
std::pair<nn::Var, nn::Var> attend(const nn::Var& query, const nn::Var& weight,
                                   const TextFeatures& text) {
  const int f = text.features.dim(1);
  const nn::Var key = nn::linear(query, weight, nn::Var());
  const nn::Var scores = nn::reshape(nn::matmul(text.features, nn::reshape(key, {f, 1})),
                                     {text.length});
  const nn::Var alpha = nn::softmax(scores);
  const nn::Var context =
      nn::reshape(nn::matmul(nn::transpose(text.features), nn::reshape(alpha, {text.length, 1})),
                  {f});
  return {alpha, context};
}

void check_state(const DecoderState& state, const TextFeatures& text, const DecoderConfig& c) {
  require(state.hidden.rank() == 3 && state.hidden.dim(0) == c.hidden &&
              state.hidden.dim(1) == c.grid.rows && state.hidden.dim(2) == c.grid.cols,
          ErrorCode::kInvalidArgument,
          "decoder state " + nn::shape_string(state.hidden.shape()) + " does not match config");
  require(text.features.rank() == 2 && text.features.dim(1) == c.text_width &&
              text.features.dim(0) == text.length && text.length >= 1,
          ErrorCode::kInvalidArgument,
          "text features " + nn::shape_string(text.features.shape()) + " do not match config");
}

}  // namespace

ObjectDecoder::ObjectDecoder(nn::ParameterStore& store, const std::string& name,
                             const DecoderConfig& config, nn::Rng& rng)
    : config_(config),
      psi1_(store, name + ".psi1", config.hidden, config.attention_hidden, 3, rng),
      psi2_(store, name + ".psi2", config.attention_hidden, 1, 3, rng),
      theta1_(store, name + ".theta1", config.pooled_context_width() + config.vocab_size,
              config.object_hidden, rng),
      theta2_(store, name + ".theta2", config.object_hidden, config.vocab_size, rng) {
  const int s = config.hidden + config.vocab_size;
  attention_weight_ = store.create_uniform(name + ".attention", {config.text_width, s},
                                           1.0 / std::sqrt(static_cast<double>(s)), rng);
}

ObjectPrediction ObjectDecoder::step(const DecoderState& state, const TextFeatures& text) const {
  check_state(state, text, config_);
  const int cells = config_.grid.rows * config_.grid.cols;
  ObjectPrediction out;
  out.spatial = spatial_softmax(psi2_(nn::relu(psi1_(state.hidden))));
  // Attention-weighted average: sum_p a_p h_p.
  out.pooled = nn::affine(nn::global_avg_pool(nn::scale_by_map(out.spatial, state.hidden)),
                          cells, 0.0);
  const nn::Var previous = one_hot(state.previous_object, config_.vocab_size);
  auto [alpha, context] = attend(nn::concat({out.pooled, previous}), attention_weight_, text);
  out.attention = alpha;
  out.context = context;
  const nn::Var logits =
      theta2_(nn::relu(theta1_(nn::concat({out.pooled, previous, out.context}))));
  std::vector<double> mask(config_.vocab_size, 0.0);
  mask[Vocabulary::kPad] = kMaskedLogit;
  mask[Vocabulary::kSos] = kMaskedLogit;
  const nn::Var masked = nn::add_constant(logits, mask);
  out.log_probs = nn::log_softmax(masked);
  out.probs = nn::softmax(masked);
  return out;
}

AttributeDecoder::AttributeDecoder(nn::ParameterStore& store, const std::string& name,
                                   const DecoderConfig& config, nn::Rng& rng)
    : config_(config),
      query_(store, name + ".query", config.vocab_size, config.query_embedding, rng),
      psi1_(store, name + ".psi1", config.pooled_context_width(), config.attention_hidden, 3, rng),
      psi2_(store, name + ".psi2", config.attention_hidden, 1, 3, rng) {
  attention_weight_ =
      store.create_uniform(name + ".attention", {config.text_width, config.query_embedding},
                           1.0 / std::sqrt(static_cast<double>(config.query_embedding)), rng);
  int in = config.pooled_context_width() + config.vocab_size;
  for (std::size_t i = 0; i < config.head_widths.size(); ++i) {
    head_.emplace_back(store, name + ".head" + std::to_string(i + 1), in, config.head_widths[i],
                       3, rng);
    in = config.head_widths[i];
  }
  head_.emplace_back(store, name + ".head4", in, config.spaces.head_channels(), 3, rng);
}

AttributeOutput AttributeDecoder::step(const DecoderState& state, const TextFeatures& text,
                                       int object) const {
  require(object >= Vocabulary::kNumSpecial && object < config_.vocab_size,
          ErrorCode::kContractViolation,
          "attribute_step called for non-category token " + std::to_string(object));
  check_state(state, text, config_);
  const int rows = config_.grid.rows, cols = config_.grid.cols;
  const nn::Var object_hot = one_hot(object, config_.vocab_size);
  AttributeOutput out;
  auto [alpha, context] = attend(query_(object_hot), attention_weight_, text);
  out.attention = alpha;
  out.context = context;
  const nn::Var x = nn::concat({state.hidden, nn::broadcast_spatial(context, rows, cols)});
  out.spatial = spatial_softmax(psi2_(nn::relu(psi1_(x))));
  // Rescaled so that uniform attention leaves the features unchanged.
  const nn::Var pooled = nn::scale_by_map(nn::affine(out.spatial, rows * cols, 0.0), x);
  nn::Var h = nn::concat({pooled, nn::broadcast_spatial(object_hot, rows, cols)});
  for (std::size_t i = 0; i + 1 < head_.size(); ++i) h = nn::relu(head_[i](h));
  out.head = head_.back()(h);
  return out;
}

int attribute_offset(const AttributeSpaces& spaces, std::size_t k) {
  int offset = 1;
  for (std::size_t i = 0; i < k; ++i) offset += spaces.discrete.at(i).cardinality;
  return offset;
}

int appearance_offset(const AttributeSpaces& spaces) { return 1 + spaces.discrete_channels(); }

AttributePrediction predict_attributes(const AttributeOutput& output,
                                       const AttributeSpaces& spaces) {
  require(output.head.dim(0) == spaces.head_channels(), ErrorCode::kInvalidArgument,
          "attribute head has " + std::to_string(output.head.dim(0)) + " channels, expected " +
              std::to_string(spaces.head_channels()));
  AttributePrediction p;
  const nn::Var loc = nn::slice(output.head, 0, 1);
  p.location = nn::reshape(nn::softmax(loc), loc.shape());
  for (std::size_t k = 0; k < spaces.discrete.size(); ++k) {
    const int b = attribute_offset(spaces, k);
    p.attributes.push_back(
        nn::channel_softmax(nn::slice(output.head, b, b + spaces.discrete[k].cardinality)));
  }
  if (spaces.appearance_dim > 0) {
    const int b = appearance_offset(spaces);
    p.appearance =
        nn::channel_l2_normalize(nn::slice(output.head, b, b + spaces.appearance_dim));
  }
  return p;
}

int argmax(const std::vector<double>& values, std::size_t begin, std::size_t end,
           std::size_t stride) {
  if (end == 0) end = values.size();
  require(begin < end && stride > 0, ErrorCode::kInvalidArgument, "argmax over empty range");
  std::size_t best = begin;
  for (std::size_t i = begin + stride; i < end; i += stride) {
    if (values[i] > values[best]) best = i;
  }
  return static_cast<int>((best - begin) / stride);
}

Cell argmax_cell(const nn::Var& location) {
  require(location.rank() == 3 && location.dim(0) == 1, ErrorCode::kInvalidArgument,
          "location map must be [1, rows, cols]");
  const int flat = argmax(location.value());
  return {flat / location.dim(2), flat % location.dim(2)};
}

SelectedAttributes select_at_location(const AttributePrediction& prediction, Cell cell) {
  const int rows = prediction.location.dim(1), cols = prediction.location.dim(2);
  require(cell.row >= 0 && cell.row < rows && cell.col >= 0 && cell.col < cols,
          ErrorCode::kInvalidArgument, "select_at_location: cell outside the grid");
  const std::size_t plane = static_cast<std::size_t>(rows) * cols;
  const std::size_t at = static_cast<std::size_t>(cell.row) * cols + cell.col;
  SelectedAttributes out;
  for (const auto& dist : prediction.attributes) {
    const std::size_t n = static_cast<std::size_t>(dist.dim(0));
    out.attributes.push_back(argmax(dist.value(), at, at + n * plane, plane));
  }
  if (prediction.appearance.defined()) {
    const int n = prediction.appearance.dim(0);
    for (int c = 0; c < n; ++c) out.appearance.push_back(prediction.appearance[c * plane + at]);
  }
  return out;
}

}  // namespace text2scene
