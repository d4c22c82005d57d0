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
// Scene similarity metrics for generated abstract scenes (also usable on
// layouts): single-object and overlapping-pair precision/recall, pose and
// expression accuracy over matched persons, and Gaussian coordinate scores.
//
// Degenerate conventions: precision is 0 when the generated side is empty
// and recall is 0 when the reference side is empty; pose/expression
// accuracy is 1 (and flagged) when no person is matched; coordinate scores
// are 0 when nothing is matched.

#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "text2scene/canvas.hpp"
#include "text2scene/scene.hpp"

namespace text2scene {

// Gaussian kernel width on normalized coordinates.
inline constexpr double kCoordSigma = 0.2;

struct ObjectMatch {
  std::size_t generated = 0;
  std::size_t reference = 0;
};

struct UobjResult {
  double precision = 0;
  double recall = 0;
  // Greedy nearest-coordinate pairs within each category.
  std::vector<ObjectMatch> matches;
};

UobjResult uobj_match(const Scene& generated, const Scene& reference);

using BoxProvider = std::function<Box(const ObjectToken&)>;
BoxProvider abstract_boxes(std::shared_ptr<const AssetLibrary> assets, Vocabulary vocab);
BoxProvider layout_boxes(TaskKind task);

// True when the boxes share positive area; touching edges do not count.
bool boxes_overlap(const Box& a, const Box& b);

// Category pair (smaller index first) of every unordered pair of objects
// whose boxes overlap, sorted.
using CategoryPair = std::pair<int, int>;
std::vector<CategoryPair> bobj_pairs(const Scene& scene, const BoxProvider& boxes);

struct PrecisionRecall {
  double precision = 0;
  double recall = 0;
};

// Multiset precision/recall over category pairs.
PrecisionRecall bobj_match(const std::vector<CategoryPair>& generated,
                           const std::vector<CategoryPair>& reference);
PrecisionRecall bobj_match(const Scene& generated, const Scene& reference,
                           const BoxProvider& boxes);

// exp(-d^2 / (2 sigma^2)).
double coord_score(double distance);

struct AttributeAccuracy {
  double pose = 1;
  double expression = 1;
  // No matched person pair; both accuracies are the convention value 1.
  bool no_persons = true;
};

AttributeAccuracy pose_expr_accuracy(const Scene& generated, const Scene& reference,
                                     const std::vector<ObjectMatch>& matches,
                                     const Vocabulary& vocab);

struct MetricsReport {
  double u_obj_precision = 0;
  double u_obj_recall = 0;
  double b_obj_precision = 0;
  double b_obj_recall = 0;
  double pose_acc = 1;
  double expr_acc = 1;
  double u_coord = 0;
  double b_coord = 0;
  bool no_persons = true;

  // Field names and values in report column order.
  static const std::vector<std::string>& field_names();
  std::vector<double> values() const;
};

MetricsReport evaluate_scene(const Scene& generated, const Scene& reference,
                             const Vocabulary& vocab, const BoxProvider& boxes);

// Macro mean of every field; no_persons only when it holds for all.
MetricsReport corpus_mean(const std::vector<MetricsReport>& reports);

}  // namespace text2scene
