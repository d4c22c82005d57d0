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

// Canvas construction for the three scene representations.
//
//  abstract   (3, H, W) RGB render of clip-art sprites, painter's order
//  layout     (|V|, H, W) one-hot category per cell
//  composite  (3|V|, H, W) one RGB triple per category holding patch pixels

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "text2scene/autograd.hpp"
#include "text2scene/image.hpp"
#include "text2scene/patch.hpp"
#include "text2scene/scene.hpp"

namespace text2scene {

struct CanvasSpec {
  int height = 0;
  int width = 0;
};

// abstract 112x112 (desk-scale render), layout 64x64, composite 128x128.
CanvasSpec default_canvas_spec(TaskKind task);

struct CanvasTensor {
  TaskKind task = TaskKind::kAbstract;
  nn::Shape shape;
  std::vector<double> data;

  int channels() const { return shape[0]; }
  int height() const { return shape[1]; }
  int width() const { return shape[2]; }
  double at(int c, int y, int x) const {
    return data[(static_cast<std::size_t>(c) * shape[1] + y) * shape[2] + x];
  }
  double& at(int c, int y, int x) {
    return data[(static_cast<std::size_t>(c) * shape[1] + y) * shape[2] + x];
  }
  nn::Var to_var() const { return nn::Var::constant(shape, data); }
};

/// Clip-art sprites and their scale conventions, loaded from a key-value
/// manifest:
///
///   canvas.width = 500          reference canvas the sprites are drawn for
///   canvas.height = 400
///   background.color = 255,255,255
///   size.0 = 1.0                scale per size attribute value
///   sprite.<category> = file.png
///   sprite.<category>.<pose>.<expression> = file.png   (persons, optional)
///
/// Sprite paths are relative to the manifest directory.
class AssetLibrary {
 public:
  static AssetLibrary load(const std::filesystem::path& manifest, const Vocabulary& vocab);
  // Procedural sprites: one distinct colored shape per category, persons
  // with visible pose and expression marks.
  static AssetLibrary synthetic(const Vocabulary& vocab);

  // Writes the sprites and a manifest that load() reads back.
  void save(const std::filesystem::path& directory, const Vocabulary& vocab) const;

  // Pose/expression variant when available, else the category sprite.
  const Image& sprite(int category, int pose = -1, int expression = -1) const;
  bool has_sprite(int category) const { return sprites_.count(category) != 0; }
  double size_scale(int size_value) const;
  int reference_width() const { return reference_width_; }
  int reference_height() const { return reference_height_; }
  const std::array<std::uint8_t, 3>& background() const { return background_; }

  // Normalized extent of a rendered token (used for overlap metrics).
  Box extent(const ObjectToken& token, const Vocabulary& vocab) const;

 private:
  int reference_width_ = 500;
  int reference_height_ = 400;
  std::array<std::uint8_t, 3> background_{255, 255, 255};
  std::vector<double> size_scales_{1.0, 0.7, 0.49};
  std::map<int, Image> sprites_;
  std::map<std::tuple<int, int, int>, Image> variants_;
};

struct CompositePlacement {
  std::int64_t patch_id = 0;
  std::int64_t source_image = 0;
  int category = 0;
  bool stuff = false;
  int x0 = 0;
  int y0 = 0;
  Image color;
  Image mask;
};

struct Canvas {
  CanvasTensor tensor;
  // Composite only: every placed patch, in placement order.
  std::vector<CompositePlacement> placements;
};

/// Builds B_t for a task. build(scene, k) is defined as k successive
/// place() calls on empty(), so canvases are prefix-consistent.
class CanvasBuilder {
 public:
  CanvasBuilder(TaskKind task, Vocabulary vocab, CanvasSpec spec);
  CanvasBuilder(TaskKind task, Vocabulary vocab);

  CanvasBuilder& set_assets(std::shared_ptr<const AssetLibrary> assets);
  CanvasBuilder& set_patches(std::shared_ptr<const PatchStore> patches);

  TaskKind task() const { return task_; }
  const CanvasSpec& spec() const { return spec_; }
  const Vocabulary& vocab() const { return vocab_; }
  nn::Shape tensor_shape() const;

  Canvas empty() const;
  void place(Canvas& canvas, const ObjectToken& token) const;
  Canvas build(const Scene& scene, std::size_t prefix) const;
  Canvas build(const Scene& scene) const { return build(scene, scene.objects.size()); }

  // RGB visualization: the abstract render, a colored category map for
  // layouts, or the flattened composite.
  Image to_image(const Canvas& canvas) const;

 private:
  TaskKind task_;
  Vocabulary vocab_;
  CanvasSpec spec_;
  std::shared_ptr<const AssetLibrary> assets_;
  std::shared_ptr<const PatchStore> patches_;
};

// Writes category one-hots over every canvas cell the box covers; later
// boxes overwrite earlier ones.
void paint_layout_box(CanvasTensor& canvas, int category, const Box& box);

// Rescales the patch so its box has the size bin's target sqrt-area
// fraction, centers it on the cell and writes its masked pixels into the
// category's channel triple.
void composite_place(Canvas& canvas, const PatchRecord& patch, Cell cell, int size_bin,
                     GridSize grid, const Vocabulary& vocab);

// Stuff placements first, then objects, each in placement order.
Image flatten_composite(const Canvas& canvas);

// Deterministic display color for a category.
std::array<std::uint8_t, 3> category_color(int category);

}  // namespace text2scene
