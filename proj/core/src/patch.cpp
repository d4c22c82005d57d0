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
#include "text2scene/patch.hpp"

#include <algorithm>
#include <string>

#include "text2scene/error.hpp"

namespace text2scene {

std::vector<double> PatchRecord::context_onehot(int vocab_size, int size) const {
  std::vector<double> out(static_cast<std::size_t>(vocab_size) * size * size, 0.0);
  if (context.empty()) return out;
  for (int y = 0; y < size; ++y) {
    const int sy = std::min(context.height - 1, y * context.height / size);
    for (int x = 0; x < size; ++x) {
      const int sx = std::min(context.width - 1, x * context.width / size);
      const int label = context.at(sx, sy, 0);
      if (label == 0) continue;
      require(label < vocab_size, ErrorCode::kInvalidArgument,
              "context label " + std::to_string(label) + " outside vocabulary");
      out[(static_cast<std::size_t>(label) * size + y) * size + x] = 1.0;
    }
  }
  return out;
}

std::size_t PatchRecord::mask_area() const {
  return static_cast<std::size_t>(
      std::count_if(mask.pixels.begin(), mask.pixels.end(), [](std::uint8_t v) { return v > 127; }));
}

PatchStore::PatchStore(std::vector<PatchRecord> records) {
  for (auto& r : records) add(std::move(r));
}

void PatchStore::add(PatchRecord record) {
  require(!contains(record.id), ErrorCode::kInvalidArgument,
          "duplicate patch id " + std::to_string(record.id));
  const auto id = record.id;
  records_.emplace(id, std::move(record));
}

const PatchRecord& PatchStore::get(std::int64_t id) const {
  auto it = records_.find(id);
  require(it != records_.end(), ErrorCode::kAssetNotFound, "unknown patch id " + std::to_string(id));
  return it->second;
}

PatchRecord& PatchStore::mutable_get(std::int64_t id) {
  auto it = records_.find(id);
  require(it != records_.end(), ErrorCode::kAssetNotFound, "unknown patch id " + std::to_string(id));
  return it->second;
}

std::vector<std::int64_t> PatchStore::ids() const {
  std::vector<std::int64_t> out;
  out.reserve(records_.size());
  for (const auto& [id, r] : records_) out.push_back(id);
  return out;
}

std::vector<std::int64_t> PatchStore::ids_in_category(int category) const {
  std::vector<std::int64_t> out;
  for (const auto& [id, r] : records_) {
    if (r.category == category) out.push_back(id);
  }
  return out;
}

}  // namespace text2scene
