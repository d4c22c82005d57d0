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
#include "text2scene/inference.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "text2scene/error.hpp"

namespace text2scene {

using nlohmann::json;

int default_max_objects(TaskKind task) { return task == TaskKind::kAbstract ? 10 : 20; }

SceneGenerator::SceneGenerator(const Text2SceneModel& model,
                               std::shared_ptr<const CanvasBuilder> builder,
                               std::shared_ptr<const PatchIndex> index)
    : model_(model), builder_(std::move(builder)), index_(std::move(index)) {
  require(builder_ != nullptr, ErrorCode::kInvalidArgument, "no canvas builder");
  require(builder_->task() == model_.config().task, ErrorCode::kInvalidArgument,
          "canvas builder and model disagree on the task");
  require(model_.config().task != TaskKind::kComposite || index_ != nullptr,
          ErrorCode::kInvalidArgument, "composite generation needs a patch index");
}

Generation SceneGenerator::generate(std::string_view text, const GenerateOptions& options) const {
  nn::NoGradGuard no_grad;
  const TaskKind task = model_.config().task;
  const int max_objects = options.max_objects > 0 ? options.max_objects : default_max_objects(task);
  const AttributeSpaces& spaces = model_.spaces();
  const Vocabulary& vocab = model_.vocab();

  const TokenSeq seq = model_.tokens(text);
  const TextFeatures features = model_.encode_text(seq.ids);
  Generation out;
  out.words = seq.words;
  out.scene.task = task;
  DecoderState state = model_.initial_state(features);
  Canvas canvas = builder_->empty();
  for (int t = 0;; ++t) {
    if (t == max_objects) {
      out.truncated = true;
      break;
    }
    if (options.keep_canvases) out.canvases.push_back(canvas.tensor);
    state.hidden = model_.advance(state.hidden, canvas.tensor);
    const ObjectPrediction obj = model_.object_decoder().step(state, features);
    const int object = argmax(obj.probs.value());
    StepAttention step;
    step.object = object;
    step.object_attention = obj.attention.value();
    if (object == Vocabulary::kEos) {
      out.steps.push_back(std::move(step));
      break;
    }

    const AttributeOutput attr = model_.attribute_decoder().step(state, features, object);
    ++out.attribute_calls;
    step.attribute_attention = attr.attention.value();
    out.steps.push_back(std::move(step));
    const AttributePrediction prediction = predict_attributes(attr, spaces);
    ObjectToken token;
    token.category = object;
    token.cell = argmax_cell(prediction.location);
    SelectedAttributes selected = select_at_location(prediction, token.cell);
    token.attributes = std::move(selected.attributes);
    // Attributes that do not apply to the category take the value the
    // dataset parsers assign.
    for (std::size_t k = 0; k < spaces.discrete.size(); ++k) {
      if (!spaces.applies(k, vocab, object)) token.attributes[k] = 0;
    }
    if (task == TaskKind::kComposite) {
      token.appearance = std::move(selected.appearance);
      token.patch_id = index_->retrieve(token.appearance, object);
    }
    builder_->place(canvas, token);
    out.scene.objects.push_back(std::move(token));
    state.previous_object = object;
  }
  return out;
}

namespace {

void draw_outline(Image& image, const LabeledBox& box, const std::array<std::uint8_t, 3>& color,
                  int thickness) {
  const auto paint = [&](int x, int y) {
    if (x < 0 || y < 0 || x >= image.width || y >= image.height) return;
    for (int k = 0; k < 3; ++k) image.at(x, y, k) = color[k];
  };
  for (int d = 0; d < thickness; ++d) {
    for (int x = box.x0; x <= box.x1; ++x) {
      paint(x, box.y0 + d);
      paint(x, box.y1 - d);
    }
    for (int y = box.y0; y <= box.y1; ++y) {
      paint(box.x0 + d, y);
      paint(box.x1 - d, y);
    }
  }
}

}  // namespace

Rendering render_output(const Scene& scene, const CanvasBuilder& builder, int width, int height) {
  require(scene.task == builder.task(), ErrorCode::kInvalidArgument,
          "scene and canvas builder disagree on the task");
  Rendering out;
  try {
    if (scene.task == TaskKind::kLayout) {
      const int w = width > 0 ? width : builder.spec().width;
      const int h = height > 0 ? height : builder.spec().height;
      out.image = Image(w, h, 3, 255);
      for (const auto& token : scene.objects) {
        const Box b = token_box(token, scene.task);
        LabeledBox box;
        box.category = token.category;
        box.label = builder.vocab().name(token.category);
        box.x0 = std::clamp(static_cast<int>(std::floor(b.x0 * w)), 0, w - 1);
        box.y0 = std::clamp(static_cast<int>(std::floor(b.y0 * h)), 0, h - 1);
        box.x1 = std::clamp(static_cast<int>(std::ceil(b.x1 * w)) - 1, box.x0, w - 1);
        box.y1 = std::clamp(static_cast<int>(std::ceil(b.y1 * h)) - 1, box.y0, h - 1);
        draw_outline(out.image, box, category_color(token.category), std::max(1, w / 128));
        out.boxes.push_back(std::move(box));
      }
      return out;
    }
    const Canvas canvas = builder.build(scene);
    out.image = builder.to_image(canvas);
    for (const auto& p : canvas.placements) out.provenance.push_back({p.patch_id, p.source_image});
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kAssetNotFound) fail(ErrorCode::kRenderError, e.what());
    throw;
  }
  return out;
}

// Attention dumps -----------------------------------------------------------------

AttentionRecord attention_record(const std::string& id, const std::string& caption,
                                 const Generation& generation, const Vocabulary& vocab) {
  AttentionRecord r;
  r.id = id;
  r.caption = caption;
  r.words = generation.words;
  r.steps = generation.steps;
  for (const auto& s : generation.steps) r.objects.push_back(vocab.name(s.object));
  return r;
}

void write_attention_record(std::ostream& out, const AttentionRecord& record) {
  json steps = json::array();
  for (std::size_t t = 0; t < record.steps.size(); ++t) {
    const auto& s = record.steps[t];
    steps.push_back({{"object", record.objects.at(t)},
                     {"object_index", s.object},
                     {"object_attention", s.object_attention},
                     {"attribute_attention", s.attribute_attention}});
  }
  out << json{{"id", record.id}, {"caption", record.caption}, {"words", record.words},
              {"steps", steps}}
             .dump()
      << "\n";
}

std::vector<AttentionRecord> read_attention_dump(std::istream& in) {
  std::vector<AttentionRecord> records;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      AttentionRecord r;
      r.id = j.at("id").get<std::string>();
      r.caption = j.at("caption").get<std::string>();
      r.words = j.at("words").get<std::vector<std::string>>();
      for (const auto& s : j.at("steps")) {
        StepAttention step;
        step.object = s.at("object_index").get<int>();
        step.object_attention = s.at("object_attention").get<std::vector<double>>();
        step.attribute_attention = s.at("attribute_attention").get<std::vector<double>>();
        const auto m = r.words.size();
        if (step.object_attention.size() != m ||
            (!step.attribute_attention.empty() && step.attribute_attention.size() != m)) {
          fail(ErrorCode::kParseError, "attention dump line " + std::to_string(number) +
                                           ": attention length differs from word count");
        }
        r.objects.push_back(s.at("object").get<std::string>());
        r.steps.push_back(std::move(step));
      }
      records.push_back(std::move(r));
    } catch (const json::exception& e) {
      fail(ErrorCode::kParseError,
           "attention dump line " + std::to_string(number) + ": " + e.what());
    }
  }
  return records;
}

namespace {

std::string top_words(const std::vector<double>& weights, const std::vector<std::string>& words,
                      int k) {
  if (weights.empty()) return "-";
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return weights[a] > weights[b]; });
  std::ostringstream out;
  out << std::fixed << std::setprecision(2);
  for (int i = 0; i < k && i < static_cast<int>(order.size()); ++i) {
    if (i) out << ", ";
    out << words[order[i]] << " " << weights[order[i]];
  }
  return out.str();
}

}  // namespace

void print_attention_table(std::ostream& out, const AttentionRecord& record, int top_k) {
  out << record.id << ": " << record.caption << "\n";
  out << std::left << std::setw(5) << "step" << std::setw(18) << "object" << std::setw(40)
      << "object attention" << "attribute attention\n";
  for (std::size_t t = 0; t < record.steps.size(); ++t) {
    const auto& s = record.steps[t];
    out << std::left << std::setw(5) << t << std::setw(18) << record.objects[t] << std::setw(40)
        << top_words(s.object_attention, record.words, top_k)
        << top_words(s.attribute_attention, record.words, top_k) << "\n";
  }
}

}  // namespace text2scene
