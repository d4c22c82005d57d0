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
#include "text2scene/model.hpp"

#include <sstream>

#include "text2scene/error.hpp"

namespace text2scene {
namespace {

template <std::size_t N>
std::string join_ints(const std::array<int, N>& v) {
  std::string out;
  for (std::size_t i = 0; i < N; ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

template <std::size_t N>
std::array<int, N> parse_ints(const std::string& text, const std::string& key) {
  std::array<int, N> out{};
  std::istringstream in(text);
  std::string part;
  std::size_t i = 0;
  while (std::getline(in, part, ',')) {
    require(i < N, ErrorCode::kParseError, key + ": too many values");
    try {
      out[i++] = std::stoi(part);
    } catch (const std::exception&) {
      fail(ErrorCode::kParseError, key + ": not an integer list: " + text);
    }
  }
  require(i == N, ErrorCode::kParseError, key + ": expected " + std::to_string(N) + " values");
  return out;
}

}  // namespace

ModelConfig ModelConfig::full(TaskKind task) {
  ModelConfig c;
  c.task = task;
  c.canvas = default_canvas_spec(task);
  c.train_word_embeddings = task == TaskKind::kComposite;
  c.patch_net.widths = {64, 128, 256, 256, 256};
  return c;
}

ModelConfig ModelConfig::compact(TaskKind task) {
  ModelConfig c = full(task);
  c.word_dim = 32;
  c.text_hidden = 24;
  c.decoder_hidden = 32;
  c.attention_hidden = 16;
  c.object_hidden = 64;
  c.query_embedding = 16;
  c.head_widths = {48, 32, 32};
  c.extractor_widths = {8, 16, 16, 16};
  c.layout_width_scale = 0.125;
  c.patch_net.widths = {16, 32, 64, 64, 64};
  return c;
}

void ModelConfig::write(KeyValues& kv, const std::string& p) const {
  kv.set(p + "word_dim", std::to_string(word_dim));
  kv.set(p + "text_hidden", std::to_string(text_hidden));
  kv.set(p + "decoder_hidden", std::to_string(decoder_hidden));
  kv.set(p + "attention_hidden", std::to_string(attention_hidden));
  kv.set(p + "object_hidden", std::to_string(object_hidden));
  kv.set(p + "query_embedding", std::to_string(query_embedding));
  kv.set(p + "head_widths", join_ints(head_widths));
  kv.set(p + "extractor_widths", join_ints(extractor_widths));
  std::ostringstream scale;
  scale.precision(17);
  scale << layout_width_scale;
  kv.set(p + "layout_width_scale", scale.str());
  kv.set(p + "patch_widths", join_ints(patch_net.widths));
  kv.set(p + "patch_descriptor_dim", std::to_string(patch_net.descriptor_dim));
  kv.set(p + "canvas_height", std::to_string(canvas.height));
  kv.set(p + "canvas_width", std::to_string(canvas.width));
  kv.set(p + "max_tokens", std::to_string(max_tokens));
  kv.set(p + "train_word_embeddings", train_word_embeddings ? "true" : "false");
}

ModelConfig ModelConfig::read(const KeyValues& kv, TaskKind task, const std::string& p) {
  const std::string preset = kv.get_or(p + "preset", "compact");
  require(preset == "compact" || preset == "full", ErrorCode::kParseError,
          "unknown model preset '" + preset + "'");
  ModelConfig c = preset == "full" ? full(task) : compact(task);
  c.word_dim = static_cast<int>(kv.get_int(p + "word_dim", c.word_dim));
  c.text_hidden = static_cast<int>(kv.get_int(p + "text_hidden", c.text_hidden));
  c.decoder_hidden = static_cast<int>(kv.get_int(p + "decoder_hidden", c.decoder_hidden));
  c.attention_hidden = static_cast<int>(kv.get_int(p + "attention_hidden", c.attention_hidden));
  c.object_hidden = static_cast<int>(kv.get_int(p + "object_hidden", c.object_hidden));
  c.query_embedding = static_cast<int>(kv.get_int(p + "query_embedding", c.query_embedding));
  if (auto v = kv.get(p + "head_widths")) c.head_widths = parse_ints<3>(*v, p + "head_widths");
  if (auto v = kv.get(p + "extractor_widths")) {
    c.extractor_widths = parse_ints<4>(*v, p + "extractor_widths");
  }
  c.layout_width_scale = kv.get_double(p + "layout_width_scale", c.layout_width_scale);
  if (auto v = kv.get(p + "patch_widths")) c.patch_net.widths = parse_ints<5>(*v, p + "patch_widths");
  c.patch_net.descriptor_dim =
      static_cast<int>(kv.get_int(p + "patch_descriptor_dim", c.patch_net.descriptor_dim));
  c.canvas.height = static_cast<int>(kv.get_int(p + "canvas_height", c.canvas.height));
  c.canvas.width = static_cast<int>(kv.get_int(p + "canvas_width", c.canvas.width));
  c.max_tokens = static_cast<int>(kv.get_int(p + "max_tokens", c.max_tokens));
  c.train_word_embeddings = kv.get_bool(p + "train_word_embeddings", c.train_word_embeddings);
  for (int v : {c.word_dim, c.text_hidden, c.decoder_hidden, c.attention_hidden, c.object_hidden,
                c.query_embedding, c.canvas.height, c.canvas.width, c.max_tokens}) {
    require(v > 0, ErrorCode::kParseError, "model dimensions must be positive");
  }
  return c;
}

Text2SceneModel::Text2SceneModel(ModelConfig config, Vocabulary vocab, WordVocabulary words,
                                 std::uint64_t seed)
    : config_(std::move(config)),
      vocab_(std::move(vocab)),
      words_(std::move(words)),
      spaces_(AttributeSpaces::for_task(config_.task)),
      grid_(grid_size(config_.task)) {
  require(vocab_.task() == config_.task, ErrorCode::kInvalidArgument,
          "vocabulary task differs from model task");
  nn::Rng rng(seed);
  const int v = vocab_.size();
  text_ = TextEncoder(store_, "text", words_.size(), config_.word_dim, config_.text_hidden, rng);
  store_.set_trainable("text.embedding", config_.train_word_embeddings);
  init_ = HiddenInitializer(store_, "init", 2 * config_.text_hidden, config_.decoder_hidden, rng);
  switch (config_.task) {
    case TaskKind::kAbstract:
      canvas_encoder_ = std::make_shared<SmallCnnExtractor>(store_, "canvas", 3,
                                                            config_.extractor_widths, grid_, rng);
      break;
    case TaskKind::kLayout:
      canvas_encoder_ = std::make_shared<ResidualCanvasEncoder>(
          store_, "canvas", layout_encoder_spec(v, config_.layout_width_scale), rng);
      break;
    case TaskKind::kComposite:
      canvas_encoder_ = std::make_shared<ResidualCanvasEncoder>(store_, "canvas",
                                                                composite_encoder_spec(v), rng);
      break;
  }
  gru_ = nn::ConvGruCell(store_, "gru", canvas_encoder_->channels(), config_.decoder_hidden, rng);
  const DecoderConfig dc = decoder_config();
  object_ = ObjectDecoder(store_, "object", dc, rng);
  attribute_ = AttributeDecoder(store_, "attribute", dc, rng);
  if (config_.task == TaskKind::kComposite) {
    patch_net_.emplace(store_, "patch", v, config_.patch_net, rng);
  }
}

void Text2SceneModel::set_canvas_extractor(std::shared_ptr<const FeatureExtractor> extractor) {
  require(extractor && extractor->channels() == canvas_encoder_->channels(),
          ErrorCode::kInvalidArgument, "extractor channel count does not match the ConvGRU input");
  canvas_encoder_ = std::move(extractor);
}

DecoderConfig Text2SceneModel::decoder_config() const {
  DecoderConfig dc;
  dc.vocab_size = vocab_.size();
  dc.hidden = config_.decoder_hidden;
  dc.text_width = config_.text_width();
  dc.attention_hidden = config_.attention_hidden;
  dc.object_hidden = config_.object_hidden;
  dc.query_embedding = config_.query_embedding;
  dc.head_widths = config_.head_widths;
  dc.grid = grid_;
  dc.spaces = spaces_;
  return dc;
}

TokenSeq Text2SceneModel::tokens(std::string_view text) const {
  return to_token_seq(text, words_, config_.max_tokens);
}

TextFeatures Text2SceneModel::encode_text(const std::vector<int>& ids) const {
  return text_.encode(ids);
}

DecoderState Text2SceneModel::initial_state(const TextFeatures& text) const {
  DecoderState s;
  s.hidden = init_(text.last_hidden, grid_);
  s.previous_object = Vocabulary::kSos;
  return s;
}

nn::Shape Text2SceneModel::canvas_shape() const {
  switch (config_.task) {
    case TaskKind::kAbstract: return {3, config_.canvas.height, config_.canvas.width};
    case TaskKind::kLayout: return {vocab_.size(), config_.canvas.height, config_.canvas.width};
    case TaskKind::kComposite:
      return {3 * vocab_.size(), config_.canvas.height, config_.canvas.width};
  }
  return {};
}

nn::Var Text2SceneModel::advance(const nn::Var& hidden, const CanvasTensor& canvas) const {
  const nn::Var features = encode_canvas(*canvas_encoder_, canvas.to_var(), canvas_shape(), grid_);
  return conv_gru_step(gru_, features, hidden);
}

}  // namespace text2scene
