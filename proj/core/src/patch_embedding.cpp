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
#include "text2scene/patch_embedding.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "text2scene/error.hpp"

namespace text2scene {

nn::Var patch_input(const PatchRecord& patch, int vocab_size) {
  constexpr int n = kPatchInputSize;
  require(!patch.color.empty() && patch.color.channels >= 3 && !patch.mask.empty(),
          ErrorCode::kInvalidArgument, "patch " + std::to_string(patch.id) + " has no pixels");
  std::vector<double> data = patch.context_onehot(vocab_size, n);
  const Image color = resize_nearest(patch.color, n, n);
  const Image mask = resize_nearest(patch.mask, n, n);
  data.reserve(data.size() + 4 * n * n);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) data.push_back(color.at(x, y, c) / 255.0);
    }
  }
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) data.push_back(mask.at(x, y, 0) > 127 ? 1.0 : 0.0);
  }
  return nn::Var::constant({vocab_size + 4, n, n}, std::move(data));
}

EmbeddingNet::EmbeddingNet(nn::ParameterStore& store, const std::string& name, int vocab_size,
                           EmbeddingNetConfig config, nn::Rng& rng)
    : vocab_size_(vocab_size), config_(config) {
  int in = vocab_size + 4;
  for (std::size_t i = 0; i < config.widths.size(); ++i) {
    trunk_.emplace_back(store, name + ".conv" + std::to_string(i + 1), in, config.widths[i], 2,
                        rng, 2, 0);
    in = config.widths[i];
  }
  fusion_ = nn::Linear(store, name + ".fusion", in + config.descriptor_dim, config.output_dim, rng);
}

void EmbeddingNet::set_feature_source(std::shared_ptr<const PatchFeatureSource> source) {
  require(!source || source->dim() == config_.descriptor_dim, ErrorCode::kInvalidArgument,
          "patch feature source has the wrong dimension");
  source_ = std::move(source);
}

nn::Var EmbeddingNet::embed_input(const nn::Var& input,
                                  const std::vector<double>& descriptor) const {
  require(input.shape() == nn::Shape{vocab_size_ + 4, kPatchInputSize, kPatchInputSize},
          ErrorCode::kInvalidArgument,
          "patch input " + nn::shape_string(input.shape()) + " does not match the network");
  require(descriptor.size() == static_cast<std::size_t>(config_.descriptor_dim),
          ErrorCode::kInvalidArgument, "patch descriptor has the wrong dimension");
  nn::Var x = input;
  for (const auto& conv : trunk_) x = nn::relu(conv(x));
  const nn::Var pooled = nn::global_avg_pool(x);
  const nn::Var d = nn::Var::constant({config_.descriptor_dim}, descriptor);
  return nn::l2_normalize(fusion_(nn::concat({pooled, d})));
}

nn::Var EmbeddingNet::operator()(const PatchRecord& patch) const {
  std::vector<double> descriptor = source_ ? source_->features(patch)
                                           : std::vector<double>(config_.descriptor_dim, 0.0);
  return embed_input(patch_input(patch, vocab_size_), descriptor);
}

std::vector<double> embed_patch(const EmbeddingNet& net, const PatchRecord& patch) {
  nn::NoGradGuard guard;
  return net(patch).value();
}

nn::Var triplet_loss(const nn::Var& query, const nn::Var& positive, const nn::Var& negative,
                     double margin) {
  require(query.size() == positive.size() && query.size() == negative.size(),
          ErrorCode::kInvalidArgument, "triplet_loss: dimension mismatch");
  require(margin >= 0, ErrorCode::kInvalidArgument, "triplet_loss: negative margin");
  const nn::Var pos = nn::reshape(positive, query.shape());
  const nn::Var neg = nn::reshape(negative, query.shape());
  const nn::Var gap = nn::sub(nn::l2_norm(nn::sub(query, pos)), nn::l2_norm(nn::sub(query, neg)));
  return nn::relu(nn::affine(gap, 1.0, margin));
}

// PatchIndex ----------------------------------------------------------------

void PatchIndex::add(std::int64_t id, int category, std::vector<double> vector) {
  require(!contains(id), ErrorCode::kInvalidArgument, "duplicate patch id " + std::to_string(id));
  require(!vector.empty(), ErrorCode::kInvalidArgument, "empty patch vector");
  if (dim_ == 0) dim_ = static_cast<int>(vector.size());
  require(static_cast<int>(vector.size()) == dim_, ErrorCode::kInvalidArgument,
          "patch vector dimension mismatch");
  for (double v : vector) {
    require(std::isfinite(v), ErrorCode::kInvalidArgument,
            "patch " + std::to_string(id) + " has a non-finite vector");
  }
  by_category_[category].emplace(id, std::move(vector));
  category_of_[id] = category;
}

std::vector<std::int64_t> PatchIndex::ids_in_category(int category) const {
  std::vector<std::int64_t> out;
  auto it = by_category_.find(category);
  if (it == by_category_.end()) return out;
  for (const auto& [id, v] : it->second) out.push_back(id);
  return out;
}

const std::vector<double>& PatchIndex::vector(std::int64_t id) const {
  auto it = category_of_.find(id);
  require(it != category_of_.end(), ErrorCode::kRetrievalMiss,
          "patch " + std::to_string(id) + " not in index");
  return by_category_.at(it->second).at(id);
}

int PatchIndex::category(std::int64_t id) const {
  auto it = category_of_.find(id);
  require(it != category_of_.end(), ErrorCode::kRetrievalMiss,
          "patch " + std::to_string(id) + " not in index");
  return it->second;
}

std::int64_t PatchIndex::retrieve(const std::vector<double>& query, int category) const {
  auto it = by_category_.find(category);
  require(it != by_category_.end() && !it->second.empty(), ErrorCode::kRetrievalMiss,
          "no patches for category " + std::to_string(category));
  require(static_cast<int>(query.size()) == dim_, ErrorCode::kInvalidArgument,
          "query dimension " + std::to_string(query.size()) + " vs index " + std::to_string(dim_));
  std::int64_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& [id, v] : it->second) {
    double d = 0;
    for (int i = 0; i < dim_; ++i) {
      const double t = query[i] - v[i];
      d += t * t;
    }
    if (d < best_d) {  // ids ascend, so ties keep the smaller id
      best_d = d;
      best = id;
    }
  }
  return best;
}

std::int64_t PatchIndex::sample_negative(int category, std::int64_t exclude, nn::Rng& rng) const {
  std::vector<std::int64_t> ids = ids_in_category(category);
  std::erase(ids, exclude);
  require(!ids.empty(), ErrorCode::kNoNegativeAvailable,
          "category " + std::to_string(category) + " has no other patch");
  std::uniform_int_distribution<std::size_t> pick(0, ids.size() - 1);
  return ids[pick(rng)];
}

namespace {
constexpr const char* kIndexMagic = "# text2scene.patchindex";
}

void PatchIndex::save(const std::filesystem::path& path, const Vocabulary& vocab) const {
  std::ofstream out(path);
  require(out.good(), ErrorCode::kIoError, "cannot write " + path.string());
  out << kIndexMagic << '\t' << kVersion << '\t' << dim_ << "\n";
  out << std::setprecision(17);
  for (const auto& [id, cat] : category_of_) {
    out << id << '\t' << vocab.name(cat) << '\t';
    const auto& v = by_category_.at(cat).at(id);
    for (std::size_t i = 0; i < v.size(); ++i) out << (i ? " " : "") << v[i];
    out << "\n";
  }
  require(out.good(), ErrorCode::kIoError, "write failed: " + path.string());
}

PatchIndex PatchIndex::load(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::kIoError, "cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  {
    std::istringstream head(line);
    std::string magic, name;
    int version = 0, dim = 0;
    head >> magic >> name >> version >> dim;
    require(magic + " " + name == kIndexMagic, ErrorCode::kParseError,
            path.string() + ": not a patch index");
    require(version == kVersion, ErrorCode::kParseError,
            path.string() + ": unsupported index version " + std::to_string(version));
  }
  PatchIndex index;
  int number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    require(t2 != std::string::npos, ErrorCode::kParseError,
            path.string() + ":" + std::to_string(number) + ": expected 3 columns");
    const auto cat = vocab.find(line.substr(t1 + 1, t2 - t1 - 1));
    require(cat.has_value(), ErrorCode::kParseError,
            path.string() + ":" + std::to_string(number) + ": unknown category");
    std::istringstream values(line.substr(t2 + 1));
    std::vector<double> v;
    double x = 0;
    while (values >> x) v.push_back(x);
    index.add(std::stoll(line.substr(0, t1)), *cat, std::move(v));
  }
  return index;
}

PatchIndex build_patch_index(const EmbeddingNet& net, const PatchStore& patches) {
  PatchIndex index;
  for (const auto id : patches.ids()) {
    const PatchRecord& p = patches.get(id);
    index.add(id, p.category, embed_patch(net, p));
  }
  return index;
}

const PatchRecord& sample_negative(const PatchStore& patches, int category, std::int64_t exclude,
                                   nn::Rng& rng) {
  std::vector<std::int64_t> ids = patches.ids_in_category(category);
  std::erase(ids, exclude);
  require(!ids.empty(), ErrorCode::kNoNegativeAvailable,
          "category " + std::to_string(category) + " has no other patch");
  std::uniform_int_distribution<std::size_t> pick(0, ids.size() - 1);
  return patches.get(ids[pick(rng)]);
}

}  // namespace text2scene
