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
#include "text2scene/canvas.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "text2scene/config.hpp"
#include "text2scene/error.hpp"

namespace text2scene {
namespace {

using Rgb = std::array<std::uint8_t, 3>;

constexpr int kSizeAttr = 0;
constexpr int kDirectionAttr = 1;
constexpr int kPoseAttr = 2;
constexpr int kExpressionAttr = 3;

Rgb parse_rgb(const std::string& text) {
  Rgb out{};
  std::istringstream in(text);
  std::string part;
  int i = 0;
  while (std::getline(in, part, ',')) {
    require(i < 3, ErrorCode::kParseError, "color has more than 3 components: " + text);
    const int v = std::stoi(part);
    require(v >= 0 && v <= 255, ErrorCode::kParseError, "color component out of range: " + text);
    out[i++] = static_cast<std::uint8_t>(v);
  }
  require(i == 3, ErrorCode::kParseError, "color needs 3 components: " + text);
  return out;
}

void fill_rect(Image& img, int x0, int y0, int x1, int y1, Rgb c) {
  x0 = std::max(x0, 0);
  y0 = std::max(y0, 0);
  x1 = std::min(x1, img.width);
  y1 = std::min(y1, img.height);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      for (int k = 0; k < 3; ++k) img.at(x, y, k) = c[k];
      img.at(x, y, 3) = 255;
    }
  }
}

void fill_ellipse(Image& img, double cx, double cy, double rx, double ry, Rgb c) {
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double dx = (x + 0.5 - cx) / rx;
      const double dy = (y + 0.5 - cy) / ry;
      if (dx * dx + dy * dy > 1.0) continue;
      for (int k = 0; k < 3; ++k) img.at(x, y, k) = c[k];
      img.at(x, y, 3) = 255;
    }
  }
}

// Filled triangle with apex at the top center, or a diamond when both is set.
void fill_wedge(Image& img, Rgb c, bool diamond) {
  const double cx = img.width / 2.0;
  for (int y = 0; y < img.height; ++y) {
    double t = (y + 0.5) / img.height;
    if (diamond) t = t < 0.5 ? 2 * t : 2 * (1 - t);
    const double half = t * img.width / 2.0;
    for (int x = 0; x < img.width; ++x) {
      if (std::abs(x + 0.5 - cx) > half) continue;
      for (int k = 0; k < 3; ++k) img.at(x, y, k) = c[k];
      img.at(x, y, 3) = 255;
    }
  }
}

Rgb shade(Rgb c, double f) {
  Rgb out;
  for (int k = 0; k < 3; ++k) out[k] = static_cast<std::uint8_t>(std::clamp(c[k] * f, 0.0, 255.0));
  return out;
}

Image object_sprite(int category) {
  Image img(80, 80, 4, 0);
  const Rgb c = category_color(category);
  switch (category % 4) {
    case 0: fill_rect(img, 6, 6, 74, 74, c); break;
    case 1: fill_ellipse(img, 40, 40, 36, 36, c); break;
    case 2: fill_wedge(img, c, false); break;
    default: fill_wedge(img, c, true); break;
  }
  // Off-center notch so horizontal flips are visible.
  fill_rect(img, 52, 20, 68, 36, shade(c, 0.35));
  return img;
}

Image person_sprite(int category, int pose, int expression) {
  static const Rgb kPose[] = {{230, 25, 75},  {60, 180, 75}, {0, 130, 200}, {245, 130, 48},
                              {145, 30, 180}, {70, 240, 240}, {128, 128, 0}};
  static const Rgb kExpr[] = {{255, 225, 25}, {250, 190, 212}, {170, 255, 195}, {255, 215, 180},
                              {220, 190, 255}};
  Image img(70, 140, 4, 0);
  const Rgb base = category_color(category);
  fill_rect(img, 10, 50, 60, 136, base);
  if (pose >= 0) fill_rect(img, 14, 70 + pose * 8, 56, 78 + pose * 8, kPose[pose % 7]);
  fill_ellipse(img, 35, 26, 22, 22, expression >= 0 ? kExpr[expression % 5] : base);
  fill_rect(img, 44, 18, 54, 28, shade(base, 0.3));
  return img;
}

double to_unit(std::uint8_t v) { return v / 255.0; }

}  // namespace

std::array<std::uint8_t, 3> category_color(int category) {
  // Golden-ratio hue walk; saturation and value alternate to separate
  // neighbouring indices further.
  const double h = std::fmod(category * 0.618033988749895, 1.0) * 6.0;
  const double s = category % 2 ? 0.65 : 0.9;
  const double v = category % 3 ? 0.9 : 0.7;
  const int i = static_cast<int>(h);
  const double f = h - i;
  const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
  double r = 0, g = 0, b = 0;
  switch (i % 6) {
    case 0: r = v, g = t, b = p; break;
    case 1: r = q, g = v, b = p; break;
    case 2: r = p, g = v, b = t; break;
    case 3: r = p, g = q, b = v; break;
    case 4: r = t, g = p, b = v; break;
    default: r = v, g = p, b = q; break;
  }
  return {static_cast<std::uint8_t>(std::lround(r * 255)),
          static_cast<std::uint8_t>(std::lround(g * 255)),
          static_cast<std::uint8_t>(std::lround(b * 255))};
}

CanvasSpec default_canvas_spec(TaskKind task) {
  switch (task) {
    case TaskKind::kAbstract: return {112, 112};
    case TaskKind::kLayout: return {64, 64};
    case TaskKind::kComposite: return {128, 128};
  }
  return {};
}

// AssetLibrary ------------------------------------------------------------

AssetLibrary AssetLibrary::load(const std::filesystem::path& manifest, const Vocabulary& vocab) {
  const KeyValues kv = KeyValues::load(manifest);
  const auto dir = manifest.parent_path();
  AssetLibrary lib;
  lib.reference_width_ = static_cast<int>(kv.get_int("canvas.width", 500));
  lib.reference_height_ = static_cast<int>(kv.get_int("canvas.height", 400));
  require(lib.reference_width_ > 0 && lib.reference_height_ > 0, ErrorCode::kParseError,
          manifest.string() + ": canvas size must be positive");
  if (auto bg = kv.get("background.color")) lib.background_ = parse_rgb(*bg);
  for (int i = 0;; ++i) {
    auto s = kv.get("size." + std::to_string(i));
    if (!s) break;
    if (i == 0) lib.size_scales_.clear();
    lib.size_scales_.push_back(kv.get_double("size." + std::to_string(i), 1.0));
  }
  for (const auto& key : kv.keys_with_prefix("sprite.")) {
    const std::string rest = key.substr(7);
    const std::string file = *kv.get(key);
    // Either "<category>" or "<category>.<pose>.<expression>"; category
    // names never contain dots.
    const auto dot = rest.find('.');
    const std::string name = rest.substr(0, dot);
    const auto cat = vocab.find(name);
    require(cat.has_value() && vocab.is_category(*cat), ErrorCode::kParseError,
            manifest.string() + ": unknown category '" + name + "'");
    const auto path = dir / file;
    require(std::filesystem::exists(path), ErrorCode::kAssetNotFound,
            "sprite file not found: " + path.string());
    Image img = read_png(path, 4);
    if (dot == std::string::npos) {
      lib.sprites_[*cat] = std::move(img);
    } else {
      int pose = 0, expr = 0;
      char sep = 0;
      std::istringstream in(rest.substr(dot + 1));
      require(static_cast<bool>(in >> pose >> sep >> expr) && sep == '.', ErrorCode::kParseError,
              manifest.string() + ": malformed sprite key '" + key + "'");
      lib.variants_[{*cat, pose, expr}] = std::move(img);
    }
  }
  return lib;
}

AssetLibrary AssetLibrary::synthetic(const Vocabulary& vocab) {
  AssetLibrary lib;
  const AttributeSpaces spaces = AttributeSpaces::for_task(vocab.task());
  const auto pose_idx = spaces.index_of("pose");
  const auto expr_idx = spaces.index_of("expression");
  for (int c = Vocabulary::kNumSpecial; c < vocab.size(); ++c) {
    if (vocab.is_person(c)) {
      lib.sprites_[c] = person_sprite(c, -1, -1);
      if (pose_idx && expr_idx) {
        for (int p = 0; p < spaces.discrete[*pose_idx].cardinality; ++p) {
          for (int e = 0; e < spaces.discrete[*expr_idx].cardinality; ++e) {
            lib.variants_[{c, p, e}] = person_sprite(c, p, e);
          }
        }
      }
    } else {
      lib.sprites_[c] = object_sprite(c);
    }
  }
  return lib;
}

void AssetLibrary::save(const std::filesystem::path& directory, const Vocabulary& vocab) const {
  std::filesystem::create_directories(directory / "sprites");
  std::ofstream out(directory / "assets.manifest");
  require(out.good(), ErrorCode::kIoError, "cannot write " + (directory / "assets.manifest").string());
  out << "canvas.width = " << reference_width_ << "\n";
  out << "canvas.height = " << reference_height_ << "\n";
  out << "background.color = " << int(background_[0]) << "," << int(background_[1]) << ","
      << int(background_[2]) << "\n";
  for (std::size_t i = 0; i < size_scales_.size(); ++i) {
    out << "size." << i << " = " << size_scales_[i] << "\n";
  }
  for (const auto& [cat, img] : sprites_) {
    const std::string file = "sprites/" + vocab.name(cat) + ".png";
    write_png(directory / file, img);
    out << "sprite." << vocab.name(cat) << " = " << file << "\n";
  }
  for (const auto& [key, img] : variants_) {
    const auto [cat, p, e] = key;
    const std::string file = "sprites/" + vocab.name(cat) + "_" + std::to_string(p) + "_" +
                             std::to_string(e) + ".png";
    write_png(directory / file, img);
    out << "sprite." << vocab.name(cat) << "." << p << "." << e << " = " << file << "\n";
  }
}

const Image& AssetLibrary::sprite(int category, int pose, int expression) const {
  if (pose >= 0 && expression >= 0) {
    auto it = variants_.find({category, pose, expression});
    if (it != variants_.end()) return it->second;
  }
  auto it = sprites_.find(category);
  require(it != sprites_.end(), ErrorCode::kAssetNotFound,
          "no clip-art sprite for category " + std::to_string(category));
  return it->second;
}

double AssetLibrary::size_scale(int size_value) const {
  require(size_value >= 0 && size_value < static_cast<int>(size_scales_.size()),
          ErrorCode::kInvalidArgument, "size value " + std::to_string(size_value) + " has no scale");
  return size_scales_[size_value];
}

namespace {

struct SpriteChoice {
  const Image* image = nullptr;
  double scale = 1.0;
  bool flip = false;
};

SpriteChoice choose_sprite(const AssetLibrary& lib, const ObjectToken& token,
                           const Vocabulary& vocab) {
  SpriteChoice out;
  const auto& a = token.attributes;
  const bool person = vocab.is_person(token.category);
  const int pose = person && a.size() > kPoseAttr ? a[kPoseAttr] : -1;
  const int expr = person && a.size() > kExpressionAttr ? a[kExpressionAttr] : -1;
  out.image = &lib.sprite(token.category, pose, expr);
  out.scale = lib.size_scale(a.size() > kSizeAttr ? a[kSizeAttr] : 0);
  out.flip = a.size() > kDirectionAttr && a[kDirectionAttr] == 1;
  return out;
}

}  // namespace

Box AssetLibrary::extent(const ObjectToken& token, const Vocabulary& vocab) const {
  const SpriteChoice s = choose_sprite(*this, token, vocab);
  const Point2 c = continuize_location(token.cell, grid_size(TaskKind::kAbstract));
  const double w = s.image->width * s.scale / reference_width_;
  const double h = s.image->height * s.scale / reference_height_;
  return {c.x - w / 2, c.y - h / 2, c.x + w / 2, c.y + h / 2};
}

// Placement ---------------------------------------------------------------

void paint_layout_box(CanvasTensor& canvas, int category, const Box& box) {
  const int h = canvas.height(), w = canvas.width();
  auto span = [](double lo, double hi, int n) {
    int a = static_cast<int>(std::floor(lo * n));
    int b = static_cast<int>(std::ceil(hi * n - 1e-9)) - 1;
    a = std::clamp(a, 0, n - 1);
    b = std::clamp(b, a, n - 1);
    return std::pair{a, b};
  };
  const auto [r0, r1] = span(box.y0, box.y1, h);
  const auto [c0, c1] = span(box.x0, box.x1, w);
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      for (int k = 0; k < canvas.channels(); ++k) canvas.at(k, r, c) = 0.0;
      canvas.at(category, r, c) = 1.0;
    }
  }
}

void composite_place(Canvas& canvas, const PatchRecord& patch, Cell cell, int bin, GridSize grid,
                     const Vocabulary& vocab) {
  CanvasTensor& t = canvas.tensor;
  require(t.task == TaskKind::kComposite, ErrorCode::kInvalidArgument,
          "composite_place needs a composite canvas");
  require(patch.box.width() > 0 && patch.box.height() > 0 && !patch.color.empty() &&
              !patch.mask.empty(),
          ErrorCode::kInvalidArgument, "patch " + std::to_string(patch.id) + " is empty");
  require(vocab.is_category(patch.category) && 3 * patch.category + 2 < t.channels(),
          ErrorCode::kInvalidArgument, "patch category outside canvas channels");
  const int W = t.width(), H = t.height();
  const double s = size_bin_center(bin);
  const double aspect = static_cast<double>(patch.box.width()) / patch.box.height();
  const double area = s * s * W * H;
  const int tw = std::max(1, static_cast<int>(std::lround(std::sqrt(area * aspect))));
  const int th = std::max(1, static_cast<int>(std::lround(std::sqrt(area / aspect))));
  const Point2 c = continuize_location(cell, grid);
  const int x0 = static_cast<int>(std::lround(c.x * W - tw / 2.0));
  const int y0 = static_cast<int>(std::lround(c.y * H - th / 2.0));

  CompositePlacement p;
  p.patch_id = patch.id;
  p.source_image = patch.source_image;
  p.category = patch.category;
  p.stuff = vocab.is_stuff(patch.category);
  p.x0 = x0;
  p.y0 = y0;
  p.color = resize_nearest(patch.color, tw, th);
  p.mask = resize_nearest(patch.mask, tw, th);

  std::size_t visible = 0;
  for (int y = 0; y < th; ++y) {
    for (int x = 0; x < tw; ++x) {
      const int cx = x0 + x, cy = y0 + y;
      if (cx < 0 || cy < 0 || cx >= W || cy >= H || p.mask.at(x, y, 0) <= 127) continue;
      ++visible;
      for (int k = 0; k < 3; ++k) {
        t.at(3 * patch.category + k, cy, cx) = to_unit(p.color.at(x, y, k));
      }
    }
  }
  require(visible > 0, ErrorCode::kPlacementError,
          "patch " + std::to_string(patch.id) + " has no visible pixels after clipping");
  canvas.placements.push_back(std::move(p));
}

Image flatten_composite(const Canvas& canvas) {
  const int W = canvas.tensor.width(), H = canvas.tensor.height();
  Image out(W, H, 3, 0);
  for (const bool stuff_pass : {true, false}) {
    for (const auto& p : canvas.placements) {
      if (p.stuff != stuff_pass) continue;
      for (int y = 0; y < p.mask.height; ++y) {
        for (int x = 0; x < p.mask.width; ++x) {
          const int cx = p.x0 + x, cy = p.y0 + y;
          if (cx < 0 || cy < 0 || cx >= W || cy >= H || p.mask.at(x, y, 0) <= 127) continue;
          for (int k = 0; k < 3; ++k) out.at(cx, cy, k) = p.color.at(x, y, k);
        }
      }
    }
  }
  return out;
}

// CanvasBuilder -----------------------------------------------------------

CanvasBuilder::CanvasBuilder(TaskKind task, Vocabulary vocab, CanvasSpec spec)
    : task_(task), vocab_(std::move(vocab)), spec_(spec) {
  require(spec_.height > 0 && spec_.width > 0, ErrorCode::kInvalidArgument,
          "canvas size must be positive");
}

CanvasBuilder::CanvasBuilder(TaskKind task, Vocabulary vocab)
    : CanvasBuilder(task, std::move(vocab), default_canvas_spec(task)) {}

CanvasBuilder& CanvasBuilder::set_assets(std::shared_ptr<const AssetLibrary> assets) {
  assets_ = std::move(assets);
  return *this;
}

CanvasBuilder& CanvasBuilder::set_patches(std::shared_ptr<const PatchStore> patches) {
  patches_ = std::move(patches);
  return *this;
}

nn::Shape CanvasBuilder::tensor_shape() const {
  switch (task_) {
    case TaskKind::kAbstract: return {3, spec_.height, spec_.width};
    case TaskKind::kLayout: return {vocab_.size(), spec_.height, spec_.width};
    case TaskKind::kComposite: return {3 * vocab_.size(), spec_.height, spec_.width};
  }
  return {};
}

Canvas CanvasBuilder::empty() const {
  Canvas c;
  c.tensor.task = task_;
  c.tensor.shape = tensor_shape();
  c.tensor.data.assign(nn::numel(c.tensor.shape), 0.0);
  if (task_ == TaskKind::kAbstract) {
    const Rgb bg = assets_ ? assets_->background() : Rgb{255, 255, 255};
    for (int k = 0; k < 3; ++k) {
      std::fill_n(c.tensor.data.begin() + static_cast<std::ptrdiff_t>(k) * spec_.height * spec_.width,
                  spec_.height * spec_.width, to_unit(bg[k]));
    }
  }
  return c;
}

void CanvasBuilder::place(Canvas& canvas, const ObjectToken& token) const {
  require(canvas.tensor.shape == tensor_shape(), ErrorCode::kInvalidArgument,
          "canvas shape " + nn::shape_string(canvas.tensor.shape) + " does not match builder");
  validate(token, task_, vocab_);
  switch (task_) {
    case TaskKind::kAbstract: {
      require(assets_ != nullptr, ErrorCode::kAssetNotFound, "no clip-art assets configured");
      const SpriteChoice s = choose_sprite(*assets_, token, vocab_);
      const int W = spec_.width, H = spec_.height;
      const int tw = std::max(1, static_cast<int>(std::lround(
                                     s.image->width * s.scale * W / assets_->reference_width())));
      const int th = std::max(1, static_cast<int>(std::lround(
                                     s.image->height * s.scale * H / assets_->reference_height())));
      Image img = resize_nearest(*s.image, tw, th);
      if (s.flip) img = flip_horizontal(img);
      const Point2 c = continuize_location(token.cell, grid_size(task_));
      const int x0 = static_cast<int>(std::lround(c.x * W - tw / 2.0));
      const int y0 = static_cast<int>(std::lround(c.y * H - th / 2.0));
      for (int y = 0; y < th; ++y) {
        for (int x = 0; x < tw; ++x) {
          const int cx = x0 + x, cy = y0 + y;
          if (cx < 0 || cy < 0 || cx >= W || cy >= H) continue;
          const double a = to_unit(img.at(x, y, 3));
          if (a == 0.0) continue;
          for (int k = 0; k < 3; ++k) {
            double& dst = canvas.tensor.at(k, cy, cx);
            dst = a * to_unit(img.at(x, y, k)) + (1 - a) * dst;
          }
        }
      }
      break;
    }
    case TaskKind::kLayout:
      paint_layout_box(canvas.tensor, token.category, token_box(token, task_));
      break;
    case TaskKind::kComposite: {
      require(patches_ != nullptr, ErrorCode::kAssetNotFound, "no patch store configured");
      require(token.patch_id.has_value(), ErrorCode::kAssetNotFound,
              "composite token has no patch id");
      composite_place(canvas, patches_->get(*token.patch_id), token.cell, token.attributes[0],
                      grid_size(task_), vocab_);
      break;
    }
  }
}

Canvas CanvasBuilder::build(const Scene& scene, std::size_t prefix) const {
  require(prefix <= scene.objects.size(), ErrorCode::kInvalidArgument, "prefix longer than scene");
  Canvas c = empty();
  for (std::size_t i = 0; i < prefix; ++i) place(c, scene.objects[i]);
  return c;
}

Image CanvasBuilder::to_image(const Canvas& canvas) const {
  const CanvasTensor& t = canvas.tensor;
  switch (task_) {
    case TaskKind::kAbstract: {
      Image out(t.width(), t.height(), 3);
      for (int y = 0; y < t.height(); ++y) {
        for (int x = 0; x < t.width(); ++x) {
          for (int k = 0; k < 3; ++k) {
            out.at(x, y, k) =
                static_cast<std::uint8_t>(std::lround(std::clamp(t.at(k, y, x), 0.0, 1.0) * 255));
          }
        }
      }
      return out;
    }
    case TaskKind::kLayout: {
      Image out(t.width(), t.height(), 3, 255);
      for (int y = 0; y < t.height(); ++y) {
        for (int x = 0; x < t.width(); ++x) {
          for (int k = 0; k < t.channels(); ++k) {
            if (t.at(k, y, x) <= 0.5) continue;
            const Rgb c = category_color(k);
            for (int j = 0; j < 3; ++j) out.at(x, y, j) = c[j];
            break;
          }
        }
      }
      return out;
    }
    case TaskKind::kComposite: return flatten_composite(canvas);
  }
  return {};
}

}  // namespace text2scene
