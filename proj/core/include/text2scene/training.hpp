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
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "text2scene/canvas.hpp"
#include "text2scene/config.hpp"
#include "text2scene/datasets.hpp"
#include "text2scene/model.hpp"

namespace text2scene {

inline constexpr double kLogFloor = 1e-12;

struct LossWeights {
  double object = 0;
  double location = 0;
  std::map<std::string, double> attributes;
  double triplet = 0;
  double attention_object = 0;
  double attention_attribute = 0;
  double margin = 0;

  static LossWeights for_task(TaskKind task);
  double attribute(const std::string& name) const;

  void write(KeyValues& kv) const;
  static LossWeights read(const KeyValues& kv, TaskKind task);
};

struct OptimizerConfig {
  double learning_rate = 5e-5;
  double decay = 0.8;
  int decay_every = 3;
  double clip_norm = 10.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void write(KeyValues& kv) const;
  static OptimizerConfig read(const KeyValues& kv);
};

// lr0 * decay^floor(epoch / decay_every), epochs counted from 0.
double learning_rate(const OptimizerConfig& config, int epoch);

// sum_i (1 - sum_t alpha_ti)^2 over M words; each step is an [M] vector.
nn::Var attention_regularizer(const std::vector<nn::Var>& steps, int words);

/// Everything the loss needs from one teacher-forced pass. Object entries
/// cover T + 1 steps (the last predicts eos); attribute entries cover T.
struct TeacherForcedOutputs {
  std::vector<nn::Var> object_probs;
  std::vector<int> object_targets;
  std::vector<nn::Var> attribute_heads;
  std::vector<ObjectToken> targets;
  std::vector<nn::Var> object_attention;
  std::vector<nn::Var> attribute_attention;
  // Composite only: |q - f+| - |q - f-| per placed patch; the loss adds the
  // margin and the hinge.
  std::vector<nn::Var> triplets;
  int words = 0;
};

// Names of the six loss components, in report order.
const std::vector<std::string>& loss_component_names();

struct LossBreakdown {
  nn::Var total;
  // Weighted contribution of each component; always six entries.
  std::map<std::string, double> components;
};

LossBreakdown total_loss(const TeacherForcedOutputs& outputs, const AttributeSpaces& spaces,
                         const Vocabulary& vocab, const LossWeights& weights);

/// Canvas builder and (composite) patch sources for teacher forcing.
struct TrainingContext {
  std::shared_ptr<const CanvasBuilder> builder;
  std::shared_ptr<const PatchStore> patches;
};

TeacherForcedOutputs teacher_forced(const Text2SceneModel& model, const TrainingExample& example,
                                    const TrainingContext& context, nn::Rng& rng);

// Global L2 norm of all gradients, then rescales them so the norm is at
// most max_norm. Returns the norm before clipping.
double clip_gradients(const std::vector<nn::Var>& params, double max_norm);
double gradient_norm(const std::vector<nn::Var>& params);

class Adam {
 public:
  explicit Adam(OptimizerConfig config) : config_(config) {}
  void step(const std::vector<nn::Var>& params, double learning_rate);
  long steps() const { return t_; }

 private:
  OptimizerConfig config_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  long t_ = 0;
};

struct TrainConfig {
  LossWeights weights;
  OptimizerConfig optimizer;
  int epochs = 30;
  int batch_size = 32;
  int patience = 5;
  // Stops after this many optimizer steps when positive.
  long max_steps = 0;
  bool shuffle = true;
  std::uint64_t seed = 0;
  std::string config_hash;
  // Checkpoints, the training log and NaN dumps go here when set.
  std::filesystem::path output_dir;
  // Full configuration snapshot stored with every checkpoint.
  std::string config_snapshot;
  std::function<void(const std::string&)> log;
};

struct EpochMetrics {
  int epoch = 0;
  double learning_rate = 0;
  double train_loss = 0;
  double val_loss = 0;
  long steps = 0;
};

struct TrainResult {
  std::vector<EpochMetrics> epochs;
  std::vector<double> step_losses;
  int best_epoch = -1;
  double best_val_loss = 0;
  bool stopped_early = false;
  std::filesystem::path best_checkpoint;
};

// Mean loss over examples without updating parameters.
double evaluate_loss(const Text2SceneModel& model, const std::vector<TrainingExample>& examples,
                     const TrainingContext& context, const LossWeights& weights,
                     std::uint64_t seed);

// Throws numerical-error (after writing nan_dump.json) on a non-finite loss.
TrainResult train(Text2SceneModel& model, const std::vector<TrainingExample>& train_set,
                  const std::vector<TrainingExample>& val_set, const TrainingContext& context,
                  const TrainConfig& config);

}  // namespace text2scene
