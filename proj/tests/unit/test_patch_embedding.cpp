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
#include <cmath>
#include <limits>
#include <fstream>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "text2scene/error.hpp"
#include "text2scene/patch_embedding.hpp"

using namespace text2scene;

namespace {

std::vector<double> random_vector(int dim, nn::Rng& rng) {
  std::normal_distribution<double> d;
  std::vector<double> v(dim);
  for (auto& x : v) x = d(rng);
  return v;
}

}  // namespace

TEST_CASE("triplet loss values") {
  const auto v = [](std::vector<double> x) { return nn::Var::constant({2}, std::move(x)); };
  // d+ = 0, d- = 0.3, margin 0.5.
  CHECK(triplet_loss(v({0, 0}), v({0, 0}), v({0.3, 0}), 0.5).item() == doctest::Approx(0.2));
  CHECK(triplet_loss(v({0, 0}), v({0, 0}), v({0, 0.9}), 0.5).item() == 0.0);
  CHECK(triplet_loss(v({1, 0}), v({0, 0}), v({1, 0}), 0.5).item() == doctest::Approx(1.5));
}

TEST_CASE("triplet loss gradient") {
  nn::Rng rng(3);
  nn::Var q = nn::Var::parameter({4}, random_vector(4, rng));
  nn::Var p = nn::Var::parameter({4}, random_vector(4, rng));
  nn::Var n = nn::Var::parameter({4}, random_vector(4, rng));
  const auto r = testing::check_gradients([&] { return triplet_loss(q, p, n, 10.0); }, {q, p, n});
  CHECK(r.max_relative_error < 1e-6);
}

TEST_CASE("retrieval matches a linear scan and breaks ties by id") {
  nn::Rng rng(5);
  PatchIndex index;
  for (int id = 0; id < 200; ++id) index.add(1000 - id, 3 + id % 4, random_vector(8, rng));
  for (int q = 0; q < 100; ++q) {
    const int cat = 3 + q % 4;
    const auto query = random_vector(8, rng);
    std::int64_t best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (auto id : index.ids_in_category(cat)) {
      double d = 0;
      for (int i = 0; i < 8; ++i) d += std::pow(query[i] - index.vector(id)[i], 2);
      if (d < best_d || (d == best_d && id < best)) {
        best_d = d;
        best = id;
      }
    }
    CHECK(index.retrieve(query, cat) == best);
  }
  PatchIndex ties;
  ties.add(9, 4, {1, 0});
  ties.add(2, 4, {-1, 0});
  ties.add(5, 4, {1, 0});
  CHECK(ties.retrieve({0, 0}, 4) == 2);
  CHECK(ties.retrieve({1, 0}, 4) == 5);
}

TEST_CASE("index errors") {
  PatchIndex index;
  index.add(1, 3, {1, 2});
  CHECK_THROWS_AS(index.add(1, 3, {1, 2}), Error);
  CHECK_THROWS_AS(index.add(2, 3, {1}), Error);
  CHECK_THROWS_AS(index.add(2, 3, {1, std::nan("")}), Error);
  try {
    index.retrieve({0, 0}, 4);
    FAIL("expected a miss");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kRetrievalMiss);
  }
  nn::Rng rng(1);
  try {
    index.sample_negative(3, 1, rng);
    FAIL("expected no negative");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNoNegativeAvailable);
  }
  index.add(7, 3, {0, 0});
  index.add(8, 3, {0, 1});
  std::set<std::int64_t> seen;
  for (int i = 0; i < 50; ++i) seen.insert(index.sample_negative(3, 7, rng));
  CHECK(seen == std::set<std::int64_t>{1, 8});
}

TEST_CASE("index files round trip") {
  const Vocabulary v = Vocabulary::for_task(TaskKind::kComposite);
  nn::Rng rng(2);
  PatchIndex index;
  for (int id = 1; id <= 20; ++id) index.add(id, v.index(id % 2 ? "dog" : "sky"), random_vector(5, rng));
  testing::TempDir dir;
  index.save(dir / "index.tsv", v);
  const PatchIndex back = PatchIndex::load(dir / "index.tsv", v);
  CHECK(back.size() == 20);
  CHECK(back.dim() == 5);
  for (int id = 1; id <= 20; ++id) {
    CHECK(back.category(id) == index.category(id));
    CHECK(back.vector(id) == index.vector(id));
  }
  std::ofstream(dir / "bad.tsv") << "not an index\n";
  CHECK_THROWS_AS(PatchIndex::load(dir / "bad.tsv", v), Error);
}

TEST_CASE("embedding net") {
  const Vocabulary v = Vocabulary::for_task(TaskKind::kComposite);
  nn::Rng rng(4);
  const PatchRecord patch = testing::synthetic_patch(1, v.index("dog"), 10, v, rng);
  const nn::Var input = patch_input(patch, v.size());
  CHECK(input.shape() == nn::Shape{v.size() + 4, 64, 64});
  // One-hot context: unlabeled pixels (top half) are all zero, labeled
  // ones carry exactly one label.
  const auto labels_at = [&](int px) {
    double s = 0;
    for (int c = 0; c < v.size(); ++c) s += input[c * 64 * 64 + px];
    return s;
  };
  CHECK(labels_at(0) == 0.0);
  CHECK(labels_at(64 * 64 - 1) == 1.0);

  nn::ParameterStore store;
  EmbeddingNetConfig cfg;
  cfg.widths = {4, 4, 4, 4, 4};
  cfg.descriptor_dim = 8;
  cfg.output_dim = 6;
  EmbeddingNet net(store, "patch", v.size(), cfg, rng);
  const nn::Var f = net(patch);
  CHECK(f.shape() == nn::Shape{6});
  CHECK(nn::l2_norm(f).item() == doctest::Approx(1.0));
  const auto e = embed_patch(net, patch);
  for (int i = 0; i < 6; ++i) CHECK(e[i] == doctest::Approx(f[i]));

  const PatchStore patches = testing::synthetic_patch_store(6, {v.index("dog"), v.index("sky")}, v, 1);
  const PatchIndex index = build_patch_index(net, patches);
  CHECK(index.size() == 6);
  for (auto id : patches.ids()) CHECK(index.retrieve(index.vector(id), patches.get(id).category) == id);
  CHECK(sample_negative(patches, v.index("dog"), 1, rng).id != 1);
}
