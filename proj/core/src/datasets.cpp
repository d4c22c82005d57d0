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
#include "text2scene/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "text2scene/error.hpp"

namespace text2scene {

namespace fs = std::filesystem;
using nlohmann::json;

// Splits --------------------------------------------------------------------

SplitSpec sequential_split(std::size_t n, std::size_t val, std::size_t test) {
  require(val + test <= n, ErrorCode::kInvalidArgument, "split larger than the example count");
  SplitSpec s;
  const std::size_t train = n - val - test;
  for (std::size_t i = 0; i < n; ++i) {
    if (i < train) {
      s.train.push_back(i);
    } else if (i < train + val) {
      s.val.push_back(i);
    } else {
      s.test.push_back(i);
    }
  }
  return s;
}

SplitSpec abstract_split(std::size_t n) {
  const auto scaled = [n](double count) {
    return static_cast<std::size_t>(std::llround(static_cast<double>(n) * count / 9997.0));
  };
  return sequential_split(n, scaled(497), scaled(1000));
}

SplitSpec holdout_images(const std::vector<TrainingExample>& examples, std::size_t val_images) {
  std::vector<std::int64_t> order;
  std::set<std::int64_t> seen;
  for (const auto& e : examples) {
    if (seen.insert(e.source_image).second) order.push_back(e.source_image);
  }
  require(val_images <= order.size(), ErrorCode::kInvalidArgument,
          "more validation images requested than available");
  const std::set<std::int64_t> held(order.end() - static_cast<std::ptrdiff_t>(val_images),
                                    order.end());
  SplitSpec s;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    (held.count(examples[i].source_image) ? s.val : s.train).push_back(i);
  }
  return s;
}

// Abstract Scenes ------------------------------------------------------------

namespace {

constexpr double kAbstractWidth = 500.0;
constexpr double kAbstractHeight = 400.0;

std::vector<fs::path> find_files(const fs::path& dir, const std::string& prefix) {
  require(fs::is_directory(dir), ErrorCode::kIoError, "not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.rfind(prefix, 0) == 0 && entry.path().extension() == ".txt") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct ClipartName {
  std::string category;
  int variant = -1;  // person sprite index, pose * 5 + expression
};

ClipartName decode_png_name(const std::string& png) {
  std::string stem = png;
  if (stem.size() > 4 && stem.compare(stem.size() - 4, 4, ".png") == 0) {
    stem.resize(stem.size() - 4);
  }
  // Thumbnails carry a trailing 's' after the index ("s_3s").
  if (stem.size() >= 2 && stem.back() == 's' && std::isdigit(static_cast<unsigned char>(stem[stem.size() - 2]))) {
    stem.pop_back();
  }
  ClipartName out;
  if (stem.rfind("hb0_", 0) == 0 || stem.rfind("hb1_", 0) == 0) {
    out.category = stem.substr(0, 3);
    out.variant = std::stoi(stem.substr(4));
  } else {
    out.category = stem;
  }
  return out;
}

class LineReader {
 public:
  explicit LineReader(const fs::path& path) : in_(path), origin_(path.string()) {
    require(in_.good(), ErrorCode::kIoError, "cannot open " + origin_);
  }

  // Next non-blank line; false at end of file.
  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++number_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") != std::string::npos) return true;
    }
    return false;
  }

  [[noreturn]] void error(const std::string& what) const {
    fail(ErrorCode::kParseError, origin_ + ":" + std::to_string(number_) + ": " + what);
  }

 private:
  std::ifstream in_;
  std::string origin_;
  int number_ = 0;
};

struct RawScene {
  std::vector<AnnotatedObject> objects;
};

void read_scene_table(const fs::path& path, const Vocabulary& vocab,
                      std::map<int, RawScene>& scenes) {
  const auto spaces = AttributeSpaces::for_task(TaskKind::kAbstract);
  LineReader reader(path);
  std::string line;
  if (!reader.next(line)) reader.error("missing scene count");
  int count = 0;
  {
    std::istringstream in(line);
    if (!(in >> count) || count < 0) reader.error("bad scene count");
  }
  for (int s = 0; s < count; ++s) {
    if (!reader.next(line)) reader.error("expected scene header");
    int index = 0, n = 0;
    std::istringstream head(line);
    if (!(head >> index >> n) || n < 0) reader.error("bad scene header '" + line + "'");
    if (scenes.count(index)) reader.error("duplicate scene index " + std::to_string(index));
    RawScene& scene = scenes[index];
    for (int i = 0; i < n; ++i) {
      if (!reader.next(line)) reader.error("expected clip-art row");
      std::istringstream row(line);
      std::string png;
      int clip_index = 0, type = 0, z = 0, flip = 0;
      double x = 0, y = 0;
      if (!(row >> png >> clip_index >> type >> x >> y >> z >> flip)) {
        reader.error("malformed clip-art row '" + line + "'");
      }
      ClipartName name;
      try {
        name = decode_png_name(png);
      } catch (const std::exception&) {
        reader.error("cannot decode clip-art name '" + png + "'");
      }
      const auto cat = vocab.find(name.category);
      if (!cat || !vocab.is_category(*cat)) reader.error("unknown clip-art '" + png + "'");
      if (z < 0 || z >= spaces.discrete[0].cardinality) reader.error("depth out of range");
      if (flip != 0 && flip != 1) reader.error("flip must be 0 or 1");
      AnnotatedObject o;
      o.category = *cat;
      o.center = {x / kAbstractWidth, y / kAbstractHeight};
      o.bottom = o.center.y;
      int pose = 0, expr = 0;
      if (vocab.is_person(*cat)) {
        const int poses = spaces.discrete[2].cardinality, exprs = spaces.discrete[3].cardinality;
        if (name.variant < 0 || name.variant >= poses * exprs) {
          reader.error("person sprite index out of range in '" + png + "'");
        }
        pose = name.variant / exprs;
        expr = name.variant % exprs;
      }
      o.attributes = {z, flip, pose, expr};
      scene.objects.push_back(std::move(o));
    }
  }
}

void read_sentences(const fs::path& path, std::map<int, std::vector<std::string>>& out) {
  LineReader reader(path);
  std::map<int, std::vector<std::string>> local;
  std::string line;
  while (reader.next(line)) {
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) reader.error("expected 'scene<TAB>index<TAB>sentence'");
    int scene = 0;
    try {
      scene = std::stoi(line.substr(0, t1));
      (void)std::stoi(line.substr(t1 + 1, t2 - t1 - 1));
    } catch (const std::exception&) {
      reader.error("non-numeric scene or sentence index");
    }
    local[scene].push_back(line.substr(t2 + 1));
  }
  // Earlier files win; later files only fill in scenes they alone describe.
  for (auto& [scene, sentences] : local) out.try_emplace(scene, std::move(sentences));
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += ' ';
    out += p;
  }
  return out;
}

}  // namespace

AbstractCorpus parse_abstract(const fs::path& dir) {
  const Vocabulary vocab = Vocabulary::for_task(TaskKind::kAbstract);
  const auto tables = find_files(dir, "Scenes_");
  require(!tables.empty(), ErrorCode::kParseError, dir.string() + ": no Scenes_*.txt table found");
  const auto sentence_files = find_files(dir, "SimpleSentences");
  require(!sentence_files.empty(), ErrorCode::kParseError,
          dir.string() + ": no SimpleSentences*.txt file found");

  std::map<int, RawScene> scenes;
  for (const auto& t : tables) read_scene_table(t, vocab, scenes);
  std::map<int, std::vector<std::string>> sentences;
  for (const auto& f : sentence_files) read_sentences(f, sentences);

  AbstractCorpus corpus;
  for (auto& [index, raw] : scenes) {
    auto it = sentences.find(index);
    if (raw.objects.empty() || it == sentences.end() || it->second.empty()) {
      ++corpus.dropped_empty;
      continue;
    }
    TrainingExample e;
    e.id = "scene-" + std::to_string(index);
    e.caption = join(it->second);
    e.source_image = index;
    e.scene = make_scene(TaskKind::kAbstract, std::move(raw.objects));
    corpus.examples.push_back(std::move(e));
  }
  corpus.split = abstract_split(corpus.examples.size());
  return corpus;
}

// COCO layouts ---------------------------------------------------------------

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::kIoError, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

LayoutCorpus parse_layout_json(const std::string& instances_json, const std::string& captions_json) {
  const Vocabulary vocab = Vocabulary::for_task(TaskKind::kLayout);
  const auto spaces = AttributeSpaces::for_task(TaskKind::kLayout);
  std::map<int, int> id_to_index;
  for (std::size_t i = 0; i < coco_thing_ids().size(); ++i) {
    id_to_index[coco_thing_ids()[i]] = vocab.index(coco_thing_names()[i]);
  }

  LayoutCorpus corpus;
  std::map<std::int64_t, ImageSize> images;
  std::map<std::int64_t, std::vector<AnnotatedObject>> objects;
  std::map<std::int64_t, std::vector<std::string>> captions;
  try {
    const json inst = json::parse(instances_json);
    for (const auto& im : inst.at("images")) {
      const ImageSize size{im.at("width").get<int>(), im.at("height").get<int>()};
      require(size.width > 0 && size.height > 0, ErrorCode::kParseError,
              "image " + std::to_string(im.at("id").get<std::int64_t>()) + " has no size");
      images[im.at("id").get<std::int64_t>()] = size;
    }
    for (const auto& a : inst.at("annotations")) {
      if (!a.contains("bbox")) continue;  // caption entries in a merged file
      const auto image_id = a.at("image_id").get<std::int64_t>();
      const auto img = images.find(image_id);
      require(img != images.end(), ErrorCode::kParseError,
              "annotation refers to missing image " + std::to_string(image_id));
      const int cat_id = a.at("category_id").get<int>();
      const auto cat = id_to_index.find(cat_id);
      require(cat != id_to_index.end(), ErrorCode::kParseError,
              "category id " + std::to_string(cat_id) + " is not a COCO thing category");
      const auto& b = a.at("bbox");
      const double W = img->second.width, H = img->second.height;
      const double x0 = std::clamp(b.at(0).get<double>(), 0.0, W);
      const double y0 = std::clamp(b.at(1).get<double>(), 0.0, H);
      const double x1 = std::clamp(b.at(0).get<double>() + b.at(2).get<double>(), 0.0, W);
      const double y1 = std::clamp(b.at(1).get<double>() + b.at(3).get<double>(), 0.0, H);
      if (x1 - x0 <= 0 || y1 - y0 <= 0) {
        corpus.warnings.push_back("image " + std::to_string(image_id) +
                                  ": dropped zero-area box for category " + std::to_string(cat_id));
        continue;
      }
      AnnotatedObject o;
      o.category = cat->second;
      o.center = {(x0 + x1) / 2 / W, (y0 + y1) / 2 / H};
      o.bottom = y1 / H;
      const double s = std::min(1.0, std::sqrt((x1 - x0) * (y1 - y0) / (W * H)));
      o.attributes.assign(spaces.discrete.size(), 0);
      o.attributes[*spaces.index_of("size")] = size_bin(s);
      o.attributes[*spaces.index_of("aspect_ratio")] = aspect_bin((x1 - x0) / (y1 - y0));
      objects[image_id].push_back(std::move(o));
    }
    const json cap = captions_json == instances_json ? inst : json::parse(captions_json);
    for (const auto& a : cap.at("annotations")) {
      if (!a.contains("caption")) continue;
      const auto image_id = a.at("image_id").get<std::int64_t>();
      require(images.count(image_id) != 0, ErrorCode::kParseError,
              "caption refers to missing image " + std::to_string(image_id));
      captions[image_id].push_back(a.at("caption").get<std::string>());
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kParseError, std::string("malformed COCO annotations: ") + e.what());
  }

  for (const auto& [image_id, caps] : captions) {
    auto obj = objects.find(image_id);
    if (obj == objects.end() || obj->second.empty()) {
      corpus.warnings.push_back("image " + std::to_string(image_id) + ": no usable objects");
      continue;
    }
    const Scene scene = make_scene(TaskKind::kLayout, obj->second, images[image_id]);
    for (std::size_t i = 0; i < caps.size(); ++i) {
      TrainingExample e;
      e.id = "coco-" + std::to_string(image_id) + "-" + std::to_string(i);
      e.caption = caps[i];
      e.scene = scene;
      e.source_image = image_id;
      corpus.examples.push_back(std::move(e));
    }
  }
  return corpus;
}

LayoutCorpus parse_layout(const fs::path& instances, const fs::path& captions) {
  const std::string inst = slurp(instances);
  if (fs::equivalent(instances, captions)) return parse_layout_json(inst, inst);
  return parse_layout_json(inst, slurp(captions));
}

// Patch database -------------------------------------------------------------

namespace {

PixelBox bounding_box(const std::vector<std::pair<int, int>>& pixels) {
  PixelBox b{pixels[0].first, pixels[0].second, pixels[0].first + 1, pixels[0].second + 1};
  for (const auto& [x, y] : pixels) {
    b.x0 = std::min(b.x0, x);
    b.y0 = std::min(b.y0, y);
    b.x1 = std::max(b.x1, x + 1);
    b.y1 = std::max(b.y1, y + 1);
  }
  return b;
}

PixelBox enlarge(const PixelBox& b, int width, int height) {
  const int dx = b.width() / 2, dy = b.height() / 2;
  return {std::max(0, b.x0 - dx), std::max(0, b.y0 - dy), std::min(width, b.x1 + dx),
          std::min(height, b.y1 + dy)};
}

Image crop(const Image& img, const PixelBox& b) {
  Image out(b.width(), b.height(), img.channels);
  for (int y = 0; y < b.height(); ++y) {
    for (int x = 0; x < b.width(); ++x) {
      for (int c = 0; c < img.channels; ++c) out.at(x, y, c) = img.at(b.x0 + x, b.y0 + y, c);
    }
  }
  return out;
}

PatchRecord make_record(std::int64_t id, int category, const PatchSourceImage& src,
                        const std::vector<std::pair<int, int>>& pixels, const Image& labels) {
  PatchRecord r;
  r.id = id;
  r.category = category;
  r.source_image = src.id;
  r.box = bounding_box(pixels);
  r.context_box = enlarge(r.box, src.color.width, src.color.height);
  r.color = crop(src.color, r.box);
  r.mask = Image(r.box.width(), r.box.height(), 1, 0);
  for (const auto& [x, y] : pixels) r.mask.at(x - r.box.x0, y - r.box.y0, 0) = 255;
  r.context = crop(labels, r.context_box);
  return r;
}

}  // namespace

PatchDbResult build_patch_db(const std::vector<PatchSourceImage>& images, const Vocabulary& vocab,
                             std::int64_t first_id) {
  require(vocab.size() <= 256, ErrorCode::kInvalidArgument, "label maps hold at most 256 labels");
  PatchDbResult result;
  std::int64_t next_id = first_id;
  for (const auto& src : images) {
    const int W = src.color.width, H = src.color.height;
    const std::string where = "image " + std::to_string(src.id);
    require(src.color.channels == 3 && W > 0 && H > 0, ErrorCode::kInvalidArgument,
            where + ": color image must be non-empty RGB");
    require(src.stuff_labels.empty() || (src.stuff_labels.width == W &&
                                         src.stuff_labels.height == H &&
                                         src.stuff_labels.channels == 1),
            ErrorCode::kInvalidArgument, where + ": stuff label map size mismatch");

    // Semantic label map for the context crops: stuff, then instances on top.
    Image labels = src.stuff_labels.empty() ? Image(W, H, 1, 0) : src.stuff_labels;
    for (const auto& inst : src.instances) {
      require(inst.mask.width == W && inst.mask.height == H && inst.mask.channels == 1,
              ErrorCode::kInvalidArgument, where + ": instance mask size mismatch");
      require(vocab.is_category(inst.category) && !vocab.is_stuff(inst.category),
              ErrorCode::kInvalidArgument, where + ": instance category is not an object");
      for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
          if (inst.mask.at(x, y, 0)) labels.at(x, y, 0) = static_cast<std::uint8_t>(inst.category);
        }
      }
    }

    for (std::size_t i = 0; i < src.instances.size(); ++i) {
      const auto& inst = src.instances[i];
      std::vector<std::pair<int, int>> pixels;
      for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
          if (inst.mask.at(x, y, 0)) pixels.emplace_back(x, y);
        }
      }
      if (static_cast<int>(pixels.size()) < kMinSegmentPixels) {
        result.warnings.push_back(where + ": skipped instance " + std::to_string(i) + " with " +
                                  std::to_string(pixels.size()) + " pixels");
        continue;
      }
      result.records.push_back(make_record(next_id++, inst.category, src, pixels, labels));
    }

    if (src.stuff_labels.empty()) continue;
    std::vector<bool> visited(static_cast<std::size_t>(W) * H, false);
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        const int label = src.stuff_labels.at(x, y, 0);
        if (label == 0 || visited[static_cast<std::size_t>(y) * W + x]) continue;
        require(vocab.is_stuff(label), ErrorCode::kInvalidArgument,
                where + ": label " + std::to_string(label) + " is not a stuff category");
        std::vector<std::pair<int, int>> pixels;
        std::deque<std::pair<int, int>> queue{{x, y}};
        visited[static_cast<std::size_t>(y) * W + x] = true;
        while (!queue.empty()) {
          const auto [cx, cy] = queue.front();
          queue.pop_front();
          pixels.emplace_back(cx, cy);
          const int nx[4] = {cx - 1, cx + 1, cx, cx};
          const int ny[4] = {cy, cy, cy - 1, cy + 1};
          for (int k = 0; k < 4; ++k) {
            if (nx[k] < 0 || ny[k] < 0 || nx[k] >= W || ny[k] >= H) continue;
            const std::size_t idx = static_cast<std::size_t>(ny[k]) * W + nx[k];
            if (visited[idx] || src.stuff_labels.at(nx[k], ny[k], 0) != label) continue;
            visited[idx] = true;
            queue.emplace_back(nx[k], ny[k]);
          }
        }
        if (static_cast<int>(pixels.size()) < kMinSegmentPixels) {
          result.warnings.push_back(where + ": skipped " + vocab.name(label) + " component with " +
                                    std::to_string(pixels.size()) + " pixels");
          continue;
        }
        std::sort(pixels.begin(), pixels.end(), [](const auto& a, const auto& b) {
          return std::tie(a.second, a.first) < std::tie(b.second, b.first);
        });
        result.records.push_back(make_record(next_id++, label, src, pixels, labels));
      }
    }
  }
  return result;
}

namespace {
constexpr const char* kPatchDbHeader = "# text2scene.patchdb\t1";
}

void write_patch_db(const fs::path& dir, const std::vector<PatchRecord>& records,
                    const Vocabulary& vocab) {
  fs::create_directories(dir / "patches");
  std::ofstream out(dir / "index.tsv");
  require(out.good(), ErrorCode::kIoError, "cannot write " + (dir / "index.tsv").string());
  out << kPatchDbHeader << "\n";
  out << "# id\tcategory\tsource_image\tx0\ty0\tx1\ty1\tcx0\tcy0\tcx1\tcy1\n";
  for (const auto& r : records) {
    const std::string stem = "patches/" + std::to_string(r.id);
    write_png(dir / (stem + "_color.png"), r.color);
    write_png(dir / (stem + "_mask.png"), r.mask);
    write_png(dir / (stem + "_context.png"), r.context);
    out << r.id << '\t' << vocab.name(r.category) << '\t' << r.source_image << '\t' << r.box.x0
        << '\t' << r.box.y0 << '\t' << r.box.x1 << '\t' << r.box.y1 << '\t' << r.context_box.x0
        << '\t' << r.context_box.y0 << '\t' << r.context_box.x1 << '\t' << r.context_box.y1
        << "\n";
  }
  require(out.good(), ErrorCode::kIoError, "write failed: " + (dir / "index.tsv").string());
}

PatchStore read_patch_db(const fs::path& dir, const Vocabulary& vocab) {
  const fs::path index = dir / "index.tsv";
  LineReader reader(index);
  std::string line;
  if (!reader.next(line) || line != kPatchDbHeader) reader.error("not a patch database index");
  PatchStore store;
  while (reader.next(line)) {
    if (line[0] == '#') continue;
    std::vector<std::string> cols;
    std::istringstream in(line);
    std::string col;
    while (std::getline(in, col, '\t')) cols.push_back(col);
    if (cols.size() != 11) reader.error("expected 11 columns");
    PatchRecord r;
    try {
      r.id = std::stoll(cols[0]);
      r.source_image = std::stoll(cols[2]);
      r.box = {std::stoi(cols[3]), std::stoi(cols[4]), std::stoi(cols[5]), std::stoi(cols[6])};
      r.context_box = {std::stoi(cols[7]), std::stoi(cols[8]), std::stoi(cols[9]),
                       std::stoi(cols[10])};
    } catch (const std::exception&) {
      reader.error("non-numeric field");
    }
    const auto cat = vocab.find(cols[1]);
    if (!cat || !vocab.is_category(*cat)) reader.error("unknown category '" + cols[1] + "'");
    r.category = *cat;
    const std::string stem = "patches/" + std::to_string(r.id);
    r.color = read_png(dir / (stem + "_color.png"), 3);
    r.mask = read_png(dir / (stem + "_mask.png"), 1);
    r.context = read_png(dir / (stem + "_context.png"), 1);
    if (r.color.width != r.box.width() || r.color.height != r.box.height()) {
      reader.error("patch image size disagrees with its box");
    }
    store.add(std::move(r));
  }
  return store;
}

std::vector<TrainingExample> composite_examples(
    const PatchStore& patches, const std::map<std::int64_t, ImageSize>& image_sizes,
    const std::map<std::int64_t, std::vector<std::string>>& captions, const Vocabulary& vocab) {
  const auto spaces = AttributeSpaces::for_task(TaskKind::kComposite);
  std::map<std::int64_t, std::vector<AnnotatedObject>> by_image;
  for (const auto id : patches.ids()) {
    const PatchRecord& r = patches.get(id);
    const auto size = image_sizes.find(r.source_image);
    require(size != image_sizes.end(), ErrorCode::kInvalidArgument,
            "no size known for source image " + std::to_string(r.source_image));
    const double W = size->second.width, H = size->second.height;
    AnnotatedObject o;
    o.category = r.category;
    o.center = {(r.box.x0 + r.box.x1) / 2.0 / W, (r.box.y0 + r.box.y1) / 2.0 / H};
    o.bottom = r.box.y1 / H;
    o.attributes.assign(spaces.discrete.size(), 0);
    o.attributes[*spaces.index_of("size")] =
        size_bin(std::min(1.0, std::sqrt(double(r.box.width()) * r.box.height() / (W * H))));
    o.attributes[*spaces.index_of("aspect_ratio")] =
        aspect_bin(static_cast<double>(r.box.width()) / r.box.height());
    if (r.embedding.size() == static_cast<std::size_t>(spaces.appearance_dim)) {
      double n = 0;
      for (double v : r.embedding) n += v * v;
      n = std::sqrt(n);
      if (n > 0) {
        for (double v : r.embedding) o.appearance.push_back(v / n);
      }
    }
    o.patch_id = r.id;
    by_image[r.source_image].push_back(std::move(o));
  }
  std::vector<TrainingExample> out;
  for (const auto& [image_id, caps] : captions) {
    auto it = by_image.find(image_id);
    if (it == by_image.end()) continue;
    const Scene scene = make_scene(TaskKind::kComposite, it->second, image_sizes.at(image_id));
    validate(scene, vocab);
    for (std::size_t i = 0; i < caps.size(); ++i) {
      TrainingExample e;
      e.id = "composite-" + std::to_string(image_id) + "-" + std::to_string(i);
      e.caption = caps[i];
      e.scene = scene;
      e.source_image = image_id;
      out.push_back(std::move(e));
    }
  }
  return out;
}

WordVocabulary caption_vocabulary(const std::vector<TrainingExample>& examples) {
  WordVocabulary vocab;
  for (const auto& e : examples) {
    for (const auto& w : tokenize(e.caption)) vocab.add(w);
  }
  return vocab;
}

}  // namespace text2scene
