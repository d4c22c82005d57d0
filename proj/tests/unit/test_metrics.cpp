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
#include <algorithm>
#include <cmath>
#include <map>

#include "doctest.h"
#include "fixtures.hpp"
#include "text2scene/error.hpp"
#include "text2scene/metrics.hpp"

using namespace text2scene;

namespace {

const Vocabulary& vocab() {
  static const Vocabulary v = Vocabulary::for_task(TaskKind::kAbstract);
  return v;
}

ObjectToken token(const std::string& name, int row, int col, int pose = 0, int expr = 0) {
  ObjectToken t;
  t.category = vocab().index(name);
  t.cell = {row, col};
  t.attributes = {0, 0, vocab().is_person(t.category) ? pose : 0,
                  vocab().is_person(t.category) ? expr : 0};
  return t;
}

Scene scene(std::vector<ObjectToken> objects) { return Scene{TaskKind::kAbstract, std::move(objects), {}}; }

// Square of side 0.2 centered on the cell.
Box square_box(const ObjectToken& t) {
  const Point2 c = continuize_location(t.cell, {28, 28});
  return {c.x - 0.1, c.y - 0.1, c.x + 0.1, c.y + 0.1};
}

std::size_t multiset_common(std::vector<int> a, std::vector<int> b) {
  std::map<int, int> ca, cb;
  for (int x : a) ++ca[x];
  for (int x : b) ++cb[x];
  std::size_t n = 0;
  for (auto [k, v] : ca) n += std::min(v, cb[k]);
  return n;
}

std::vector<CategoryPair> brute_pairs(const Scene& s) {
  std::vector<CategoryPair> out;
  for (std::size_t i = 0; i < s.objects.size(); ++i) {
    for (std::size_t j = i + 1; j < s.objects.size(); ++j) {
      const Box a = square_box(s.objects[i]), b = square_box(s.objects[j]);
      const double w = std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
      const double h = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
      if (w > 0 && h > 0) {
        const int x = s.objects[i].category, y = s.objects[j].category;
        out.emplace_back(std::min(x, y), std::max(x, y));
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("worked example: three objects against three") {
  // Generated: a dog overlapping a tree, a sun far away. Reference: a dog
  // overlapping a tree which also overlaps a hat.
  const Scene gen = scene({token("a_3", 10, 10), token("p_1", 11, 11), token("s_0", 1, 25)});
  const Scene ref = scene({token("a_3", 10, 10), token("p_1", 11, 12), token("c_1", 11, 17)});
  const MetricsReport r = evaluate_scene(gen, ref, vocab(), square_box);
  CHECK(r.u_obj_precision == doctest::Approx(2.0 / 3.0));
  CHECK(r.u_obj_recall == doctest::Approx(2.0 / 3.0));
  CHECK(r.b_obj_precision == doctest::Approx(1.0));
  CHECK(r.b_obj_recall == doctest::Approx(0.5));
  CHECK(r.no_persons);
  CHECK(r.pose_acc == 1.0);
  // Matched tree is one column (1/28) away.
  const double d = 1.0 / 28.0;
  CHECK(r.u_coord == doctest::Approx((1.0 + coord_score(d)) / 2.0));
  CHECK(r.b_coord == doctest::Approx(coord_score(d)));
}

TEST_CASE("coordinate kernel") {
  CHECK(coord_score(0.0) == 1.0);
  CHECK(coord_score(0.2) == doctest::Approx(std::exp(-0.5)));
  CHECK(coord_score(0.4) == doctest::Approx(std::exp(-2.0)));
  CHECK_THROWS_AS(coord_score(-0.1), Error);
}

TEST_CASE("degenerate conventions") {
  const Scene empty = scene({});
  const Scene one = scene({token("a_3", 3, 3)});
  MetricsReport r = evaluate_scene(empty, one, vocab(), square_box);
  CHECK(r.u_obj_precision == 0.0);
  CHECK(r.u_obj_recall == 0.0);
  CHECK(r.u_coord == 0.0);
  CHECK(r.b_coord == 0.0);
  r = evaluate_scene(one, empty, vocab(), square_box);
  CHECK(r.u_obj_precision == 0.0);
  CHECK(r.u_obj_recall == 0.0);
  r = evaluate_scene(one, one, vocab(), square_box);
  CHECK(r.u_obj_precision == 1.0);
  CHECK(r.u_coord == 1.0);
  CHECK(r.b_obj_precision == 0.0);
  CHECK(r.no_persons);
  CHECK_THROWS_AS(uobj_match(one, Scene{TaskKind::kLayout, {}, {}}), Error);
}

TEST_CASE("pose and expression accuracy over matched persons") {
  const Scene gen = scene({token("hb0", 5, 5, 3, 1), token("hb1", 20, 20, 2, 4), token("hb0", 1, 1, 0, 0)});
  const Scene ref = scene({token("hb0", 5, 6, 3, 2), token("hb1", 20, 20, 1, 4)});
  const MetricsReport r = evaluate_scene(gen, ref, vocab(), square_box);
  CHECK(!r.no_persons);
  CHECK(r.pose_acc == doctest::Approx(0.5));
  CHECK(r.expr_acc == doctest::Approx(0.5));
}

TEST_CASE("greedy matching prefers the nearest instance") {
  const Scene gen = scene({token("a_3", 0, 0), token("a_3", 20, 20)});
  const Scene ref = scene({token("a_3", 19, 20)});
  const UobjResult u = uobj_match(gen, ref);
  REQUIRE(u.matches.size() == 1);
  CHECK(u.matches[0].generated == 1);
  CHECK(u.precision == 0.5);
  CHECK(u.recall == 1.0);
}

TEST_CASE("overlap requires positive area") {
  CHECK(!boxes_overlap({0, 0, 1, 1}, {1, 0, 2, 1}));
  CHECK(boxes_overlap({0, 0, 1, 1}, {0.99, 0.99, 2, 2}));
  CHECK(!boxes_overlap({0, 0, 1, 1}, {0.5, 1, 2, 2}));
}

TEST_CASE("random scenes agree with brute-force oracles and are symmetric") {
  nn::Rng rng(23);
  const std::vector<std::string> names = {"a_3", "p_1", "hb0", "s_0"};
  std::uniform_int_distribution<int> cat(0, 3), cell(0, 27), count(0, 8);
  const auto random = [&] {
    std::vector<ObjectToken> objs;
    const int n = count(rng);
    for (int i = 0; i < n; ++i) objs.push_back(token(names[cat(rng)], cell(rng), cell(rng), 1, 1));
    return scene(objs);
  };
  for (int trial = 0; trial < 300; ++trial) {
    const Scene a = random(), b = random();
    std::vector<int> ca, cb;
    for (const auto& t : a.objects) ca.push_back(t.category);
    for (const auto& t : b.objects) cb.push_back(t.category);
    const std::size_t common = multiset_common(ca, cb);
    const UobjResult u = uobj_match(a, b);
    CHECK(u.matches.size() == common);
    CHECK(u.precision == doctest::Approx(a.objects.empty() ? 0.0 : double(common) / a.objects.size()));

    const auto pa = brute_pairs(a), pb = brute_pairs(b);
    CHECK(bobj_pairs(a, square_box) == pa);
    std::vector<int> ka, kb;
    for (auto [x, y] : pa) ka.push_back(x * 1000 + y);
    for (auto [x, y] : pb) kb.push_back(x * 1000 + y);
    const std::size_t pc = multiset_common(ka, kb);
    const PrecisionRecall bo = bobj_match(a, b, square_box);
    CHECK(bo.precision == doctest::Approx(pa.empty() ? 0.0 : double(pc) / pa.size()));
    CHECK(bo.recall == doctest::Approx(pb.empty() ? 0.0 : double(pc) / pb.size()));

    const MetricsReport ab = evaluate_scene(a, b, vocab(), square_box);
    const MetricsReport ba = evaluate_scene(b, a, vocab(), square_box);
    CHECK(ab.u_obj_precision == ba.u_obj_recall);
    CHECK(ab.b_obj_precision == ba.b_obj_recall);
    for (double v : ab.values()) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("corpus mean") {
  MetricsReport a, b;
  a.u_obj_precision = 1.0;
  b.u_obj_precision = 0.5;
  a.no_persons = false;
  const MetricsReport m = corpus_mean({a, b});
  CHECK(m.u_obj_precision == doctest::Approx(0.75));
  CHECK(m.pose_acc == 1.0);
  CHECK(!m.no_persons);
  CHECK(MetricsReport::field_names().size() == m.values().size());
}

TEST_CASE("asset-backed boxes") {
  const auto assets = std::make_shared<AssetLibrary>(AssetLibrary::synthetic(vocab()));
  const BoxProvider boxes = abstract_boxes(assets, vocab());
  const Box b = boxes(token("p_1", 14, 14));
  CHECK(b.width() > 0);
  CHECK(b.height() > 0);
  const Box l = layout_boxes(TaskKind::kLayout)(ObjectToken{5, {14, 14}, {8, 8}, {}, {}});
  CHECK(l.area() > 0);
}
