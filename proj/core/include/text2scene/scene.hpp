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

// Scene data model shared by every task: vocabularies, attribute spaces,
// grid discretization and the canonical object ordering.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace text2scene {

enum class TaskKind { kAbstract, kLayout, kComposite };

std::string_view to_string(TaskKind task);
TaskKind parse_task(std::string_view name);

struct GridSize {
  int rows = 0;
  int cols = 0;
  bool operator==(const GridSize&) const = default;
};

// (28, 28) for abstract and layout, (32, 32) for composite.
GridSize grid_size(TaskKind task);

struct Cell {
  int row = 0;
  int col = 0;
  bool operator==(const Cell&) const = default;
  auto operator<=>(const Cell&) const = default;
};

struct Point2 {
  double x = 0;
  double y = 0;
};

/// Axis-aligned box in normalized image coordinates, x to the right and y
/// downwards.
struct Box {
  double x0 = 0;
  double y0 = 0;
  double x1 = 0;
  double y1 = 0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
};

struct ImageSize {
  int width = 0;
  int height = 0;
  bool operator==(const ImageSize&) const = default;
};

/// Category vocabulary. Indices are dense: the special tokens pad, sos and
/// eos occupy 0..2 and categories follow in their declared order.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kSos = 1;
  static constexpr int kEos = 2;
  static constexpr int kNumSpecial = 3;

  static Vocabulary for_task(TaskKind task);
  static Vocabulary custom(TaskKind task, const std::vector<std::string>& categories,
                           const std::vector<std::string>& persons = {},
                           const std::vector<std::string>& stuff = {});

  TaskKind task() const { return task_; }
  int size() const { return static_cast<int>(names_.size()); }
  int num_categories() const { return size() - kNumSpecial; }
  int pad() const { return kPad; }
  int sos() const { return kSos; }
  int eos() const { return kEos; }

  const std::string& name(int index) const;
  std::optional<int> find(std::string_view name) const;
  int index(std::string_view name) const;

  bool is_special(int index) const { return index >= 0 && index < kNumSpecial; }
  bool is_category(int index) const { return index >= kNumSpecial && index < size(); }
  bool is_person(int index) const;
  bool is_stuff(int index) const;

 private:
  TaskKind task_ = TaskKind::kAbstract;
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> lookup_;
  std::vector<bool> person_;
  std::vector<bool> stuff_;
};

// The 80 COCO thing categories in id order, and their official ids.
const std::vector<std::string>& coco_thing_names();
const std::vector<int>& coco_thing_ids();
// The 15 COCO-Stuff super-categories.
const std::vector<std::string>& coco_stuff_supercategories();
// The 58 clip-art categories of the Abstract Scenes corpus.
const std::vector<std::string>& abstract_clipart_names();

struct AttributeSpec {
  std::string name;
  int cardinality = 0;
  bool person_only = false;
};

struct AttributeSpaces {
  std::vector<AttributeSpec> discrete;
  int appearance_dim = 0;

  static AttributeSpaces for_task(TaskKind task);

  int discrete_channels() const;
  // 1 (location) + sum of cardinalities + appearance dimension.
  int head_channels() const { return 1 + discrete_channels() + appearance_dim; }
  std::optional<int> index_of(std::string_view name) const;
  bool applies(std::size_t attribute, const Vocabulary& vocab, int category) const;
};

struct ObjectToken {
  int category = 0;
  Cell cell;
  std::vector<int> attributes;
  // Unit-norm appearance vector (composite only).
  std::vector<double> appearance;
  // Source patch for composite scenes, when known.
  std::optional<std::int64_t> patch_id;

  bool operator==(const ObjectToken&) const = default;
};

struct Scene {
  TaskKind task = TaskKind::kAbstract;
  std::vector<ObjectToken> objects;
  std::optional<ImageSize> source_size;

  bool operator==(const Scene&) const = default;
};

// Throws kInvalidArgument describing the first violated invariant.
void validate(const ObjectToken& token, TaskKind task, const Vocabulary& vocab);
void validate(const Scene& scene, const Vocabulary& vocab);

// Discretization ---------------------------------------------------------

constexpr int kNumSizeBins = 17;
constexpr int kNumAspectBins = 17;

Cell discretize_location(Point2 xy, GridSize grid);
Point2 continuize_location(Cell cell, GridSize grid);

int size_bin(double normalized_size);
// Center of a size bin, used as the inverse mapping when rendering.
double size_bin_center(int bin);

const std::array<double, kNumAspectBins>& aspect_ratios();
int aspect_bin(double ratio);

// Box reconstructed from a layout/composite token: centered on the cell,
// sqrt-area equal to the size bin center, width/height equal to the aspect
// ratio bin (in source pixels when the source size is known).
Box token_box(const ObjectToken& token, TaskKind task, std::optional<ImageSize> source = {});

// Ordering ---------------------------------------------------------------

enum class VerticalOrder {
  kBottomFirst,  // larger y (closer to the camera) first
  kTopFirst,
};

struct AnnotatedObject {
  int category = 0;
  Point2 center;
  // Normalized y of the lower edge; equal to center.y for point objects.
  double bottom = 0;
  std::vector<int> attributes;
  std::vector<double> appearance;
  std::optional<std::int64_t> patch_id;
};

std::vector<AnnotatedObject> order_objects(std::vector<AnnotatedObject> objects,
                                           VerticalOrder order = VerticalOrder::kBottomFirst);

// Orders and discretizes a set of annotated objects into a scene.
Scene make_scene(TaskKind task, std::vector<AnnotatedObject> objects,
                 std::optional<ImageSize> source = {},
                 VerticalOrder order = VerticalOrder::kBottomFirst);

}  // namespace text2scene
