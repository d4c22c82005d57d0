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
#include "text2scene/scene.hpp"

#include <algorithm>
#include <cmath>

#include "text2scene/error.hpp"

namespace text2scene {

std::string_view to_string(TaskKind task) {
  switch (task) {
    case TaskKind::kAbstract: return "abstract";
    case TaskKind::kLayout: return "layout";
    case TaskKind::kComposite: return "composite";
  }
  return "abstract";
}

TaskKind parse_task(std::string_view name) {
  if (name == "abstract") return TaskKind::kAbstract;
  if (name == "layout") return TaskKind::kLayout;
  if (name == "composite") return TaskKind::kComposite;
  fail(ErrorCode::kInvalidArgument, "unknown task '" + std::string(name) + "'");
}

GridSize grid_size(TaskKind task) {
  return task == TaskKind::kComposite ? GridSize{32, 32} : GridSize{28, 28};
}

// ---------------------------------------------------------------------------
// Category tables

const std::vector<std::string>& coco_thing_names() {
  static const std::vector<std::string> names = {
      "person",        "bicycle",      "car",           "motorcycle",    "airplane",
      "bus",           "train",        "truck",         "boat",          "traffic light",
      "fire hydrant",  "stop sign",    "parking meter", "bench",         "bird",
      "cat",           "dog",          "horse",         "sheep",         "cow",
      "elephant",      "bear",         "zebra",         "giraffe",       "backpack",
      "umbrella",      "handbag",      "tie",           "suitcase",      "frisbee",
      "skis",          "snowboard",    "sports ball",   "kite",          "baseball bat",
      "baseball glove", "skateboard",  "surfboard",     "tennis racket", "bottle",
      "wine glass",    "cup",          "fork",          "knife",         "spoon",
      "bowl",          "banana",       "apple",         "sandwich",      "orange",
      "broccoli",      "carrot",       "hot dog",       "pizza",         "donut",
      "cake",          "chair",        "couch",         "potted plant",  "bed",
      "dining table",  "toilet",       "tv",            "laptop",        "mouse",
      "remote",        "keyboard",     "cell phone",    "microwave",     "oven",
      "toaster",       "sink",         "refrigerator",  "book",          "clock",
      "vase",          "scissors",     "teddy bear",    "hair drier",    "toothbrush"};
  return names;
}

const std::vector<int>& coco_thing_ids() {
  static const std::vector<int> ids = {
      1,  2,  3,  4,  5,  6,  7,  8,  9,  10, 11, 13, 14, 15, 16, 17, 18, 19, 20, 21,
      22, 23, 24, 25, 27, 28, 31, 32, 33, 34, 35, 36, 37, 38, 39, 40, 41, 42, 43, 44,
      46, 47, 48, 49, 50, 51, 52, 53, 54, 55, 56, 57, 58, 59, 60, 61, 62, 63, 64, 65,
      67, 70, 72, 73, 74, 75, 76, 77, 78, 79, 80, 81, 82, 84, 85, 86, 87, 88, 89, 90};
  return ids;
}

const std::vector<std::string>& coco_stuff_supercategories() {
  static const std::vector<std::string> names = {
      "water",       "ground", "solid",  "sky",    "plant",   "structural", "building",
      "food-stuff",  "textile", "furniture-stuff", "window", "floor", "ceiling", "wall",
      "raw-material"};
  return names;
}

const std::vector<std::string>& abstract_clipart_names() {
  // Named after the corpus' sprite file prefixes: sky, large objects, the
  // two children, animals, clothing, food and toys.
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    auto group = [&out](const char* prefix, int n) {
      for (int i = 0; i < n; ++i) out.push_back(std::string(prefix) + "_" + std::to_string(i));
    };
    group("s", 8);
    group("p", 10);
    out.push_back("hb0");
    out.push_back("hb1");
    group("a", 6);
    group("c", 10);
    group("e", 7);
    group("t", 15);
    return out;
  }();
  return names;
}

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary Vocabulary::custom(TaskKind task, const std::vector<std::string>& categories,
                              const std::vector<std::string>& persons,
                              const std::vector<std::string>& stuff) {
  Vocabulary v;
  v.task_ = task;
  v.names_ = {"<pad>", "<sos>", "<eos>"};
  v.names_.insert(v.names_.end(), categories.begin(), categories.end());
  for (int i = 0; i < v.size(); ++i) {
    require(v.lookup_.emplace(v.names_[i], i).second, ErrorCode::kInvalidArgument,
            "duplicate category '" + v.names_[i] + "'");
  }
  v.person_.assign(v.names_.size(), false);
  v.stuff_.assign(v.names_.size(), false);
  for (const auto& p : persons) v.person_[v.index(p)] = true;
  for (const auto& s : stuff) v.stuff_[v.index(s)] = true;
  return v;
}

Vocabulary Vocabulary::for_task(TaskKind task) {
  switch (task) {
    case TaskKind::kAbstract:
      return custom(task, abstract_clipart_names(), {"hb0", "hb1"});
    case TaskKind::kLayout:
      return custom(task, coco_thing_names());
    case TaskKind::kComposite: {
      std::vector<std::string> all = coco_thing_names();
      const auto& stuff = coco_stuff_supercategories();
      all.insert(all.end(), stuff.begin(), stuff.end());
      return custom(task, all, {}, stuff);
    }
  }
  fail(ErrorCode::kInvalidArgument, "unknown task");
}

const std::string& Vocabulary::name(int index) const {
  require(index >= 0 && index < size(), ErrorCode::kInvalidArgument,
          "category index " + std::to_string(index) + " out of range");
  return names_[index];
}

std::optional<int> Vocabulary::find(std::string_view name) const {
  auto it = lookup_.find(std::string(name));
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

int Vocabulary::index(std::string_view name) const {
  auto idx = find(name);
  require(idx.has_value(), ErrorCode::kInvalidArgument,
          "unknown category '" + std::string(name) + "'");
  return *idx;
}

bool Vocabulary::is_person(int index) const {
  return index >= 0 && index < size() && person_[index];
}

bool Vocabulary::is_stuff(int index) const {
  return index >= 0 && index < size() && stuff_[index];
}

// ---------------------------------------------------------------------------
// Attributes

AttributeSpaces AttributeSpaces::for_task(TaskKind task) {
  AttributeSpaces a;
  if (task == TaskKind::kAbstract) {
    a.discrete = {{"size", 3, false},
                  {"direction", 2, false},
                  {"pose", 7, true},
                  {"expression", 5, true}};
  } else {
    a.discrete = {{"size", kNumSizeBins, false}, {"aspect_ratio", kNumAspectBins, false}};
  }
  if (task == TaskKind::kComposite) a.appearance_dim = 128;
  return a;
}

int AttributeSpaces::discrete_channels() const {
  int n = 0;
  for (const auto& d : discrete) n += d.cardinality;
  return n;
}

std::optional<int> AttributeSpaces::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < discrete.size(); ++i) {
    if (discrete[i].name == name) return static_cast<int>(i);
  }
  return std::nullopt;
}

bool AttributeSpaces::applies(std::size_t attribute, const Vocabulary& vocab,
                              int category) const {
  return !discrete.at(attribute).person_only || vocab.is_person(category);
}

void validate(const ObjectToken& token, TaskKind task, const Vocabulary& vocab) {
  require(vocab.is_category(token.category), ErrorCode::kInvalidArgument,
          "token category " + std::to_string(token.category) + " is not an object category");
  const GridSize grid = grid_size(task);
  require(token.cell.row >= 0 && token.cell.row < grid.rows && token.cell.col >= 0 &&
              token.cell.col < grid.cols,
          ErrorCode::kInvalidArgument, "token cell outside the grid");
  const auto spaces = AttributeSpaces::for_task(task);
  require(token.attributes.size() == spaces.discrete.size(), ErrorCode::kInvalidArgument,
          "token carries " + std::to_string(token.attributes.size()) + " attributes, expected " +
              std::to_string(spaces.discrete.size()));
  for (std::size_t k = 0; k < spaces.discrete.size(); ++k) {
    require(token.attributes[k] >= 0 && token.attributes[k] < spaces.discrete[k].cardinality,
            ErrorCode::kInvalidArgument,
            "attribute '" + spaces.discrete[k].name + "' value " +
                std::to_string(token.attributes[k]) + " out of range");
  }
  if (!token.appearance.empty()) {
    require(spaces.appearance_dim > 0 &&
                token.appearance.size() == static_cast<std::size_t>(spaces.appearance_dim),
            ErrorCode::kInvalidArgument, "unexpected appearance vector");
    double ss = 0;
    for (double v : token.appearance) ss += v * v;
    require(std::abs(std::sqrt(ss) - 1.0) <= 1e-6, ErrorCode::kInvalidArgument,
            "appearance vector is not unit norm");
  }
}

void validate(const Scene& scene, const Vocabulary& vocab) {
  require(vocab.task() == scene.task, ErrorCode::kInvalidArgument,
          "vocabulary task differs from scene task");
  for (const auto& t : scene.objects) validate(t, scene.task, vocab);
}

// ---------------------------------------------------------------------------
// Discretization

Cell discretize_location(Point2 xy, GridSize grid) {
  require(std::isfinite(xy.x) && std::isfinite(xy.y), ErrorCode::kInvalidArgument,
          "discretize_location: non-finite coordinates");
  auto bin = [](double v, int n) {
    const double f = std::floor(v * n);
    if (f < 0) return 0;
    if (f > n - 1) return n - 1;
    return static_cast<int>(f);
  };
  return {bin(xy.y, grid.rows), bin(xy.x, grid.cols)};
}

Point2 continuize_location(Cell cell, GridSize grid) {
  require(cell.row >= 0 && cell.row < grid.rows && cell.col >= 0 && cell.col < grid.cols,
          ErrorCode::kInvalidArgument,
          "continuize_location: cell (" + std::to_string(cell.row) + "," +
              std::to_string(cell.col) + ") outside grid");
  return {(cell.col + 0.5) / grid.cols, (cell.row + 0.5) / grid.rows};
}

int size_bin(double s) {
  require(std::isfinite(s) && s >= 0.0 && s <= 1.0, ErrorCode::kInvalidArgument,
          "size_bin: normalized size " + std::to_string(s) + " outside [0,1]");
  return std::clamp(static_cast<int>(std::floor(s * kNumSizeBins)), 0, kNumSizeBins - 1);
}

double size_bin_center(int bin) {
  require(bin >= 0 && bin < kNumSizeBins, ErrorCode::kInvalidArgument, "size bin out of range");
  return (bin + 0.5) / kNumSizeBins;
}

const std::array<double, kNumAspectBins>& aspect_ratios() {
  static const std::array<double, kNumAspectBins> ratios = {
      1.0 / 9, 1.0 / 8, 1.0 / 7, 1.0 / 6, 1.0 / 5, 1.0 / 4, 1.0 / 3, 1.0 / 2, 1.0,
      2.0,     3.0,     4.0,     5.0,     6.0,     7.0,     8.0,     9.0};
  return ratios;
}

int aspect_bin(double ratio) {
  require(std::isfinite(ratio) && ratio > 0, ErrorCode::kInvalidArgument,
          "aspect_bin: ratio must be positive");
  const double lr = std::log(ratio);
  int best = 0;
  double best_d = std::abs(lr - std::log(aspect_ratios()[0]));
  for (int i = 1; i < kNumAspectBins; ++i) {
    const double d = std::abs(lr - std::log(aspect_ratios()[i]));
    if (d < best_d) {
      best = i;
      best_d = d;
    }
  }
  return best;
}

Box token_box(const ObjectToken& token, TaskKind task, std::optional<ImageSize> source) {
  require(task != TaskKind::kAbstract, ErrorCode::kInvalidArgument,
          "token_box: abstract tokens have no box attributes");
  const auto spaces = AttributeSpaces::for_task(task);
  const int size_idx = *spaces.index_of("size");
  const int aspect_idx = *spaces.index_of("aspect_ratio");
  require(token.attributes.size() == spaces.discrete.size(), ErrorCode::kInvalidArgument,
          "token_box: missing attributes");
  const Point2 c = continuize_location(token.cell, grid_size(task));
  const double s = size_bin_center(token.attributes[size_idx]);
  double r = aspect_ratios().at(token.attributes[aspect_idx]);
  if (source && source->width > 0 && source->height > 0) {
    r *= static_cast<double>(source->height) / source->width;
  }
  const double w = s * std::sqrt(r);
  const double h = s / std::sqrt(r);
  return {c.x - w / 2, c.y - h / 2, c.x + w / 2, c.y + h / 2};
}

// ---------------------------------------------------------------------------
// Ordering

std::vector<AnnotatedObject> order_objects(std::vector<AnnotatedObject> objects,
                                           VerticalOrder order) {
  const bool bottom_first = order == VerticalOrder::kBottomFirst;
  std::stable_sort(objects.begin(), objects.end(),
                   [bottom_first](const AnnotatedObject& a, const AnnotatedObject& b) {
                     if (a.bottom != b.bottom) {
                       return bottom_first ? a.bottom > b.bottom : a.bottom < b.bottom;
                     }
                     if (a.center.x != b.center.x) return a.center.x < b.center.x;
                     if (a.category != b.category) return a.category < b.category;
                     // Remaining fields only make the order total.
                     if (a.center.y != b.center.y) return a.center.y < b.center.y;
                     if (a.attributes != b.attributes) return a.attributes < b.attributes;
                     if (a.patch_id != b.patch_id) return a.patch_id < b.patch_id;
                     return a.appearance < b.appearance;
                   });
  return objects;
}

Scene make_scene(TaskKind task, std::vector<AnnotatedObject> objects,
                 std::optional<ImageSize> source, VerticalOrder order) {
  Scene scene;
  scene.task = task;
  scene.source_size = source;
  const GridSize grid = grid_size(task);
  for (auto& o : order_objects(std::move(objects), order)) {
    ObjectToken t;
    t.category = o.category;
    t.cell = discretize_location(o.center, grid);
    t.attributes = std::move(o.attributes);
    t.appearance = std::move(o.appearance);
    t.patch_id = o.patch_id;
    scene.objects.push_back(std::move(t));
  }
  return scene;
}

}  // namespace text2scene
