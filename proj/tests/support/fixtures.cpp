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
#include "fixtures.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <unistd.h>

#include "text2scene/error.hpp"

namespace text2scene::testing {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

namespace {

const std::map<std::string, std::string>& category_words() {
  static const std::map<std::string, std::string> words = {
      {"s_0", "sun"},    {"s_2", "cloud"}, {"p_1", "tree"},  {"p_5", "table"},
      {"hb0", "mike"},   {"hb1", "jenny"}, {"a_0", "bear"},  {"a_3", "dog"},
      {"c_1", "hat"},    {"e_2", "pizza"}, {"t_4", "ball"},  {"t_9", "kite"}};
  return words;
}

const std::vector<std::string> kPoseWords = {"standing", "sitting",  "running",  "kicking",
                                             "waving",   "jumping",  "crouching"};
const std::vector<std::string> kExpressionWords = {"happy", "sad", "angry", "surprised",
                                                   "scared"};

}  // namespace

const std::vector<std::string>& fixture_categories() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, word] : category_words()) out.push_back(name);
    return out;
  }();
  return names;
}

void write_abstract_fixture(const fs::path& dir, const AbstractFixtureOptions& options) {
  require(options.scenes >= 1 && options.tables >= 1 && options.min_objects >= 1 &&
              options.max_objects >= options.min_objects,
          ErrorCode::kInvalidArgument, "bad fixture options");
  fs::create_directories(dir);
  nn::Rng rng(options.seed);
  const auto& names = fixture_categories();
  std::uniform_int_distribution<int> count(options.min_objects, options.max_objects);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(names.size()) - 1);
  std::uniform_int_distribution<int> px(40, 460), py(40, 360), depth(0, 2), flip(0, 1),
      pose(0, 6), expression(0, 4);

  std::vector<std::ostringstream> tables(options.tables);
  std::vector<int> per_table(options.tables, 0);
  std::vector<std::ostringstream> bodies(options.tables);
  std::ofstream sentences(dir / "SimpleSentences_fixture.txt");
  for (int s = 0; s < options.scenes; ++s) {
    const int n = count(rng);
    std::vector<std::string> chosen;
    while (static_cast<int>(chosen.size()) < n) {
      const std::string& c = names[pick(rng)];
      if (std::find(chosen.begin(), chosen.end(), c) == chosen.end()) chosen.push_back(c);
    }
    const int table = s % options.tables;
    ++per_table[table];
    bodies[table] << s << " " << n << "\n";
    int sentence = 0;
    for (const auto& c : chosen) {
      const int x = px(rng), y = py(rng);
      const std::string& word = category_words().at(c);
      if (c == "hb0" || c == "hb1") {
        const int p = pose(rng), e = expression(rng);
        bodies[table] << c << "_" << (p * 5 + e) << ".png 0 0 " << x << " " << y << " "
                      << depth(rng) << " " << flip(rng) << "\n";
        sentences << s << "\t" << sentence++ << "\t" << word << " is " << kExpressionWords[e]
                  << " and " << kPoseWords[p] << ".\n";
      } else {
        bodies[table] << c << ".png 0 0 " << x << " " << y << " " << depth(rng) << " "
                      << flip(rng) << "\n";
        sentences << s << "\t" << sentence++ << "\t" << "there is a " << word << ".\n";
      }
    }
  }
  for (int t = 0; t < options.tables; ++t) {
    std::ofstream out(dir / ("Scenes_fixture" + std::to_string(t) + ".txt"));
    out << per_table[t] << "\n" << bodies[t].str();
  }
}

std::vector<TrainingExample> abstract_fixture(const AbstractFixtureOptions& options) {
  TempDir dir("t2s-abstract");
  write_abstract_fixture(dir.path(), options);
  return parse_abstract(dir.path()).examples;
}

Scene random_scene(TaskKind task, const Vocabulary& vocab, int objects, nn::Rng& rng) {
  const GridSize grid = grid_size(task);
  const AttributeSpaces spaces = AttributeSpaces::for_task(task);
  std::uniform_int_distribution<int> category(Vocabulary::kNumSpecial, vocab.size() - 1);
  std::uniform_int_distribution<int> row(0, grid.rows - 1), col(0, grid.cols - 1);
  Scene scene;
  scene.task = task;
  for (int i = 0; i < objects; ++i) {
    ObjectToken t;
    t.category = category(rng);
    t.cell = {row(rng), col(rng)};
    for (std::size_t k = 0; k < spaces.discrete.size(); ++k) {
      std::uniform_int_distribution<int> value(0, spaces.discrete[k].cardinality - 1);
      const int v = value(rng);
      t.attributes.push_back(spaces.applies(k, vocab, t.category) ? v : 0);
    }
    scene.objects.push_back(std::move(t));
  }
  return scene;
}

PatchRecord synthetic_patch(std::int64_t id, int category, std::int64_t source_image,
                            const Vocabulary& vocab, nn::Rng& rng, int size) {
  std::uniform_int_distribution<int> byte(0, 255);
  PatchRecord p;
  p.id = id;
  p.category = category;
  p.source_image = source_image;
  p.box = {size, size, 2 * size, 2 * size};
  p.context_box = {size / 2, size / 2, 2 * size + size / 2, 2 * size + size / 2};
  p.color = Image(size, size, 3);
  p.mask = Image(size, size, 1);
  const std::uint8_t base[3] = {static_cast<std::uint8_t>(byte(rng)),
                                static_cast<std::uint8_t>(byte(rng)),
                                static_cast<std::uint8_t>(byte(rng))};
  const double r = size / 2.0;
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      for (int k = 0; k < 3; ++k) {
        p.color.at(x, y, k) = static_cast<std::uint8_t>((base[k] + byte(rng) / 8) % 256);
      }
      const double dx = (x + 0.5 - r) / r, dy = (y + 0.5 - r) / r;
      p.mask.at(x, y, 0) = dx * dx + dy * dy <= 1.0 ? 255 : 0;
    }
  }
  const int cw = p.context_box.width(), ch = p.context_box.height();
  p.context = Image(cw, ch, 1);
  std::uniform_int_distribution<int> label(Vocabulary::kNumSpecial, vocab.size() - 1);
  const int stuff = label(rng);
  for (int y = 0; y < ch; ++y) {
    for (int x = 0; x < cw; ++x) p.context.at(x, y, 0) = static_cast<std::uint8_t>(y > ch / 2 ? stuff : 0);
  }
  return p;
}

PatchStore synthetic_patch_store(int count, const std::vector<int>& categories,
                                 const Vocabulary& vocab, std::uint64_t seed) {
  require(!categories.empty(), ErrorCode::kInvalidArgument, "no patch categories");
  nn::Rng rng(seed);
  PatchStore store;
  for (int i = 0; i < count; ++i) {
    const int category = categories[static_cast<std::size_t>(i) % categories.size()];
    store.add(synthetic_patch(i + 1, category, 100 + i / 3, vocab, rng));
  }
  return store;
}

}  // namespace text2scene::testing
