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
#include "text2scene/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "text2scene/error.hpp"

namespace text2scene {

namespace {

Point2 position(const ObjectToken& token, TaskKind task) {
  return continuize_location(token.cell, grid_size(task));
}

double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

// Index pairs (i < j) of overlapping boxes, found with a sweep over x.
std::vector<std::pair<std::size_t, std::size_t>> overlapping(const std::vector<Box>& boxes) {
  std::vector<std::size_t> order(boxes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(boxes[a].x0, a) < std::tie(boxes[b].x0, b);
  });
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t a = 0; a < order.size(); ++a) {
    const Box& A = boxes[order[a]];
    for (std::size_t b = a + 1; b < order.size(); ++b) {
      const Box& B = boxes[order[b]];
      if (B.x0 >= A.x1) break;
      if (boxes_overlap(A, B)) {
        out.emplace_back(std::min(order[a], order[b]), std::max(order[a], order[b]));
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Box> scene_boxes(const Scene& scene, const BoxProvider& boxes) {
  std::vector<Box> out;
  out.reserve(scene.objects.size());
  for (const auto& t : scene.objects) out.push_back(boxes(t));
  return out;
}

CategoryPair category_pair(const Scene& scene, std::size_t i, std::size_t j) {
  const int a = scene.objects[i].category, b = scene.objects[j].category;
  return {std::min(a, b), std::max(a, b)};
}

}  // namespace

UobjResult uobj_match(const Scene& generated, const Scene& reference) {
  require(generated.task == reference.task, ErrorCode::kInvalidArgument,
          "cannot compare scenes of different tasks");
  const TaskKind task = generated.task;
  UobjResult result;
  std::map<int, std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> by_category;
  for (std::size_t i = 0; i < generated.objects.size(); ++i) {
    by_category[generated.objects[i].category].first.push_back(i);
  }
  for (std::size_t j = 0; j < reference.objects.size(); ++j) {
    by_category[reference.objects[j].category].second.push_back(j);
  }
  for (const auto& [category, members] : by_category) {
    const auto& [gen, ref] = members;
    std::vector<std::tuple<double, std::size_t, std::size_t>> candidates;
    for (std::size_t i : gen) {
      for (std::size_t j : ref) {
        candidates.emplace_back(distance(position(generated.objects[i], task),
                                         position(reference.objects[j], task)),
                                i, j);
      }
    }
    std::sort(candidates.begin(), candidates.end());
    std::vector<bool> gen_used(generated.objects.size()), ref_used(reference.objects.size());
    for (const auto& [d, i, j] : candidates) {
      if (gen_used[i] || ref_used[j]) continue;
      gen_used[i] = ref_used[j] = true;
      result.matches.push_back({i, j});
    }
  }
  std::sort(result.matches.begin(), result.matches.end(),
            [](const ObjectMatch& a, const ObjectMatch& b) { return a.generated < b.generated; });
  // Greedy matching within a category pairs min(count_gen, count_ref)
  // objects, which is exactly the multiset intersection size.
  result.precision = ratio(result.matches.size(), generated.objects.size());
  result.recall = ratio(result.matches.size(), reference.objects.size());
  return result;
}

BoxProvider abstract_boxes(std::shared_ptr<const AssetLibrary> assets, Vocabulary vocab) {
  require(assets != nullptr, ErrorCode::kInvalidArgument, "no asset library");
  return [assets = std::move(assets), vocab = std::move(vocab)](const ObjectToken& t) {
    return assets->extent(t, vocab);
  };
}

BoxProvider layout_boxes(TaskKind task) {
  return [task](const ObjectToken& t) { return token_box(t, task); };
}

bool boxes_overlap(const Box& a, const Box& b) {
  return std::min(a.x1, b.x1) - std::max(a.x0, b.x0) > 0 &&
         std::min(a.y1, b.y1) - std::max(a.y0, b.y0) > 0;
}

std::vector<CategoryPair> bobj_pairs(const Scene& scene, const BoxProvider& boxes) {
  std::vector<CategoryPair> out;
  for (const auto& [i, j] : overlapping(scene_boxes(scene, boxes))) {
    out.push_back(category_pair(scene, i, j));
  }
  std::sort(out.begin(), out.end());
  return out;
}

PrecisionRecall bobj_match(const std::vector<CategoryPair>& generated,
                           const std::vector<CategoryPair>& reference) {
  std::map<CategoryPair, std::size_t> gen_counts, ref_counts;
  for (const auto& p : generated) ++gen_counts[p];
  for (const auto& p : reference) ++ref_counts[p];
  std::size_t common = 0;
  for (const auto& [pair, n] : gen_counts) {
    auto it = ref_counts.find(pair);
    if (it != ref_counts.end()) common += std::min(n, it->second);
  }
  return {ratio(common, generated.size()), ratio(common, reference.size())};
}

PrecisionRecall bobj_match(const Scene& generated, const Scene& reference,
                           const BoxProvider& boxes) {
  require(generated.task == reference.task, ErrorCode::kInvalidArgument,
          "cannot compare scenes of different tasks");
  return bobj_match(bobj_pairs(generated, boxes), bobj_pairs(reference, boxes));
}

double coord_score(double d) {
  require(d >= 0, ErrorCode::kInvalidArgument, "coordinate distance must be non-negative");
  return std::exp(-d * d / (2 * kCoordSigma * kCoordSigma));
}

AttributeAccuracy pose_expr_accuracy(const Scene& generated, const Scene& reference,
                                     const std::vector<ObjectMatch>& matches,
                                     const Vocabulary& vocab) {
  const AttributeSpaces spaces = AttributeSpaces::for_task(generated.task);
  const auto pose = spaces.index_of("pose");
  const auto expression = spaces.index_of("expression");
  AttributeAccuracy acc;
  if (!pose || !expression) return acc;
  std::size_t persons = 0, pose_hits = 0, expression_hits = 0;
  for (const auto& m : matches) {
    const ObjectToken& g = generated.objects.at(m.generated);
    const ObjectToken& r = reference.objects.at(m.reference);
    if (g.category != r.category || !vocab.is_person(g.category)) continue;
    ++persons;
    pose_hits += g.attributes.at(*pose) == r.attributes.at(*pose);
    expression_hits += g.attributes.at(*expression) == r.attributes.at(*expression);
  }
  if (persons == 0) return acc;
  acc.no_persons = false;
  acc.pose = ratio(pose_hits, persons);
  acc.expression = ratio(expression_hits, persons);
  return acc;
}

const std::vector<std::string>& MetricsReport::field_names() {
  static const std::vector<std::string> names = {
      "u_obj_precision", "u_obj_recall", "b_obj_precision", "b_obj_recall",
      "pose_acc",        "expr_acc",     "u_coord",         "b_coord"};
  return names;
}

std::vector<double> MetricsReport::values() const {
  return {u_obj_precision, u_obj_recall, b_obj_precision, b_obj_recall,
          pose_acc,        expr_acc,     u_coord,         b_coord};
}

MetricsReport evaluate_scene(const Scene& generated, const Scene& reference,
                             const Vocabulary& vocab, const BoxProvider& boxes) {
  const TaskKind task = generated.task;
  MetricsReport report;
  const UobjResult u = uobj_match(generated, reference);
  report.u_obj_precision = u.precision;
  report.u_obj_recall = u.recall;

  const std::vector<Box> gen_boxes = scene_boxes(generated, boxes);
  const std::vector<Box> ref_boxes = scene_boxes(reference, boxes);
  const auto gen_pairs = overlapping(gen_boxes);
  const auto ref_pairs = overlapping(ref_boxes);
  std::vector<CategoryPair> gen_categories, ref_categories;
  for (const auto& [i, j] : gen_pairs) gen_categories.push_back(category_pair(generated, i, j));
  for (const auto& [i, j] : ref_pairs) ref_categories.push_back(category_pair(reference, i, j));
  const PrecisionRecall b = bobj_match(gen_categories, ref_categories);
  report.b_obj_precision = b.precision;
  report.b_obj_recall = b.recall;

  const AttributeAccuracy a = pose_expr_accuracy(generated, reference, u.matches, vocab);
  report.pose_acc = a.pose;
  report.expr_acc = a.expression;
  report.no_persons = a.no_persons;

  std::vector<std::ptrdiff_t> ref_of(generated.objects.size(), -1);
  double u_sum = 0;
  for (const auto& m : u.matches) {
    ref_of[m.generated] = static_cast<std::ptrdiff_t>(m.reference);
    u_sum += coord_score(distance(position(generated.objects[m.generated], task),
                                  position(reference.objects[m.reference], task)));
  }
  report.u_coord = u.matches.empty() ? 0.0 : u_sum / static_cast<double>(u.matches.size());

  // A generated overlapping pair counts as matched when both members are
  // matched and their reference counterparts overlap too; the score
  // compares the relative offsets within each pair.
  double b_sum = 0;
  std::size_t b_count = 0;
  for (const auto& [i, j] : gen_pairs) {
    if (ref_of[i] < 0 || ref_of[j] < 0) continue;
    const auto ri = static_cast<std::size_t>(ref_of[i]);
    const auto rj = static_cast<std::size_t>(ref_of[j]);
    if (!boxes_overlap(ref_boxes[ri], ref_boxes[rj])) continue;
    const Point2 gi = position(generated.objects[i], task), gj = position(generated.objects[j], task);
    const Point2 qi = position(reference.objects[ri], task), qj = position(reference.objects[rj], task);
    b_sum += coord_score(std::hypot((gj.x - gi.x) - (qj.x - qi.x), (gj.y - gi.y) - (qj.y - qi.y)));
    ++b_count;
  }
  report.b_coord = b_count == 0 ? 0.0 : b_sum / static_cast<double>(b_count);
  return report;
}

MetricsReport corpus_mean(const std::vector<MetricsReport>& reports) {
  MetricsReport mean;
  if (reports.empty()) return mean;
  std::vector<double> sums(MetricsReport::field_names().size(), 0.0);
  bool no_persons = true;
  for (const auto& r : reports) {
    const auto v = r.values();
    for (std::size_t k = 0; k < v.size(); ++k) sums[k] += v[k];
    no_persons = no_persons && r.no_persons;
  }
  const double n = static_cast<double>(reports.size());
  mean.u_obj_precision = sums[0] / n;
  mean.u_obj_recall = sums[1] / n;
  mean.b_obj_precision = sums[2] / n;
  mean.b_obj_recall = sums[3] / n;
  mean.pose_acc = sums[4] / n;
  mean.expr_acc = sums[5] / n;
  mean.u_coord = sums[6] / n;
  mean.b_coord = sums[7] / n;
  mean.no_persons = no_persons;
  return mean;
}

}  // namespace text2scene
