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
#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <vector>

#include "text2scene/image.hpp"

namespace text2scene {

/// Pixel rectangle [x0, x1) x [y0, y1).
struct PixelBox {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  bool operator==(const PixelBox&) const = default;
};

/// A segmented foreground or stuff region cut from a source image.
struct PatchRecord {
  std::int64_t id = 0;
  int category = 0;
  std::int64_t source_image = 0;
  PixelBox box;
  PixelBox context_box;
  Image color;    // RGB crop of box
  Image mask;     // 0/255 crop of box
  Image context;  // vocabulary label per pixel over context_box, 0 = unlabeled
  std::vector<double> embedding;

  // One-hot [vocab_size, size, size] semantic context, nearest resampled.
  std::vector<double> context_onehot(int vocab_size, int size) const;
  std::size_t mask_area() const;
};

/// Patch records keyed by id.
class PatchStore {
 public:
  PatchStore() = default;
  explicit PatchStore(std::vector<PatchRecord> records);

  void add(PatchRecord record);
  bool contains(std::int64_t id) const { return records_.count(id) != 0; }
  const PatchRecord& get(std::int64_t id) const;
  PatchRecord& mutable_get(std::int64_t id);
  std::size_t size() const { return records_.size(); }
  std::vector<std::int64_t> ids() const;
  std::vector<std::int64_t> ids_in_category(int category) const;

 private:
  std::map<std::int64_t, PatchRecord> records_;
};

}  // namespace text2scene
