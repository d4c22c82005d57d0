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
#include "text2scene/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "text2scene/checkpoint.hpp"
#include "text2scene/error.hpp"

namespace text2scene {

using nlohmann::json;

// Weights ----------------------------------------------------------------------

LossWeights LossWeights::for_task(TaskKind task) {
  LossWeights w;
  switch (task) {
    case TaskKind::kAbstract:
      w.object = 8;
      w.location = 2;
      w.attributes = {{"pose", 2}, {"expression", 2}, {"size", 1}, {"direction", 1}};
      w.attention_object = 1;
      w.attention_attribute = 1;
      break;
    case TaskKind::kLayout:
      w.object = 5;
      w.location = 2;
      w.attributes = {{"size", 2}, {"aspect_ratio", 2}};
      w.attention_object = 1;
      w.attention_attribute = 0;
      break;
    case TaskKind::kComposite:
      w.object = 5;
      w.location = 2;
      w.attributes = {{"size", 2}, {"aspect_ratio", 2}};
      w.attention_object = 1;
      w.attention_attribute = 0;
      w.triplet = 10;
      w.margin = 0.5;
      break;
  }
  return w;
}

double LossWeights::attribute(const std::string& name) const {
  auto it = attributes.find(name);
  return it == attributes.end() ? 0.0 : it->second;
}

namespace {

std::string format_double(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

void check_non_negative(double v, const std::string& key) {
  require(std::isfinite(v) && v >= 0, ErrorCode::kInvalidArgument,
          key + " must be a non-negative number");
}

}  // namespace

void LossWeights::write(KeyValues& kv) const {
  kv.set("loss.object", format_double(object));
  kv.set("loss.location", format_double(location));
  for (const auto& [name, w] : attributes) kv.set("loss.attribute." + name, format_double(w));
  kv.set("loss.triplet", format_double(triplet));
  kv.set("loss.attention_object", format_double(attention_object));
  kv.set("loss.attention_attribute", format_double(attention_attribute));
  kv.set("loss.margin", format_double(margin));
}

LossWeights LossWeights::read(const KeyValues& kv, TaskKind task) {
  LossWeights w = for_task(task);
  w.object = kv.get_double("loss.object", w.object);
  w.location = kv.get_double("loss.location", w.location);
  const auto spaces = AttributeSpaces::for_task(task);
  for (const auto& key : kv.keys_with_prefix("loss.attribute.")) {
    const std::string name = key.substr(15);
    require(spaces.index_of(name).has_value(), ErrorCode::kInvalidArgument,
            "loss weight for unknown attribute '" + name + "'");
    w.attributes[name] = kv.get_double(key, 0.0);
  }
  w.triplet = kv.get_double("loss.triplet", w.triplet);
  w.attention_object = kv.get_double("loss.attention_object", w.attention_object);
  w.attention_attribute = kv.get_double("loss.attention_attribute", w.attention_attribute);
  w.margin = kv.get_double("loss.margin", w.margin);
  check_non_negative(w.object, "loss.object");
  check_non_negative(w.location, "loss.location");
  for (const auto& [name, v] : w.attributes) check_non_negative(v, "loss.attribute." + name);
  check_non_negative(w.triplet, "loss.triplet");
  check_non_negative(w.attention_object, "loss.attention_object");
  check_non_negative(w.attention_attribute, "loss.attention_attribute");
  check_non_negative(w.margin, "loss.margin");
  return w;
}

void OptimizerConfig::write(KeyValues& kv) const {
  kv.set("optimizer.learning_rate", format_double(learning_rate));
  kv.set("optimizer.decay", format_double(decay));
  kv.set("optimizer.decay_every", std::to_string(decay_every));
  kv.set("optimizer.clip_norm", format_double(clip_norm));
}

OptimizerConfig OptimizerConfig::read(const KeyValues& kv) {
  OptimizerConfig c;
  c.learning_rate = kv.get_double("optimizer.learning_rate", c.learning_rate);
  c.decay = kv.get_double("optimizer.decay", c.decay);
  c.decay_every = static_cast<int>(kv.get_int("optimizer.decay_every", c.decay_every));
  c.clip_norm = kv.get_double("optimizer.clip_norm", c.clip_norm);
  require(c.learning_rate > 0 && c.decay > 0 && c.decay_every > 0 && c.clip_norm > 0,
          ErrorCode::kInvalidArgument, "optimizer rates, decay period and clip must be positive");
  return c;
}

double learning_rate(const OptimizerConfig& config, int epoch) {
  require(epoch >= 0, ErrorCode::kInvalidArgument, "epoch must be non-negative");
  return config.learning_rate * std::pow(config.decay, epoch / config.decay_every);
}

// Loss ---------------------------------------------------------------------------

nn::Var attention_regularizer(const std::vector<nn::Var>& steps, int words) {
  require(words >= 0, ErrorCode::kInvalidArgument, "negative word count");
  nn::Var total = nn::Var::zeros({words});
  for (const auto& a : steps) {
    require(a.size() == static_cast<std::size_t>(words), ErrorCode::kInvalidArgument,
            "attention step has " + std::to_string(a.size()) + " weights, expected " +
                std::to_string(words));
    total = nn::add(total, nn::reshape(a, {words}));
  }
  return nn::sum(nn::square(nn::affine(total, -1.0, 1.0)));
}

const std::vector<std::string>& loss_component_names() {
  static const std::vector<std::string> names = {
      "object", "location", "attributes", "triplet", "attention_object", "attention_attribute"};
  return names;
}

namespace {

nn::Var sum_or_zero(const std::vector<nn::Var>& terms) {
  return terms.empty() ? nn::Var::scalar(0.0) : nn::sum_all(terms);
}

}  // namespace

LossBreakdown total_loss(const TeacherForcedOutputs& out, const AttributeSpaces& spaces,
                         const Vocabulary& vocab, const LossWeights& weights) {
  require(out.object_probs.size() == out.object_targets.size(), ErrorCode::kInvalidArgument,
          "object predictions and targets differ in length");
  require(out.attribute_heads.size() == out.targets.size(), ErrorCode::kInvalidArgument,
          "attribute predictions and targets differ in length");
  const auto nll = [](const nn::Var& prob) {
    return nn::affine(nn::log_clamped(prob, kLogFloor), -1.0, 0.0);
  };

  std::vector<nn::Var> object_terms;
  for (std::size_t t = 0; t < out.object_probs.size(); ++t) {
    object_terms.push_back(nll(nn::pick(out.object_probs[t], out.object_targets[t])));
  }

  std::vector<nn::Var> location_terms, attribute_terms;
  for (std::size_t t = 0; t < out.targets.size(); ++t) {
    const nn::Var& head = out.attribute_heads[t];
    const ObjectToken& target = out.targets[t];
    const int cols = head.dim(2);
    const nn::Var loc = nn::softmax(nn::slice(head, 0, 1));
    location_terms.push_back(nll(nn::pick(loc, target.cell.row * cols + target.cell.col)));
    for (std::size_t k = 0; k < spaces.discrete.size(); ++k) {
      const double w = weights.attribute(spaces.discrete[k].name);
      if (w == 0.0 || !spaces.applies(k, vocab, target.category)) continue;
      const int b = attribute_offset(spaces, k);
      const nn::Var logits = nn::cell_vector(nn::slice(head, b, b + spaces.discrete[k].cardinality),
                                             target.cell.row, target.cell.col);
      attribute_terms.push_back(
          nn::affine(nll(nn::pick(nn::softmax(logits), target.attributes[k])), w, 0.0));
    }
  }

  std::vector<nn::Var> triplet_terms;
  for (const auto& gap : out.triplets) {
    triplet_terms.push_back(nn::relu(nn::affine(gap, 1.0, weights.margin)));
  }

  std::vector<std::pair<double, nn::Var>> parts = {
      {weights.object, sum_or_zero(object_terms)},
      {weights.location, sum_or_zero(location_terms)},
      {1.0, sum_or_zero(attribute_terms)},
      {weights.triplet, sum_or_zero(triplet_terms)},
      {weights.attention_object, attention_regularizer(out.object_attention, out.words)},
      {weights.attention_attribute, attention_regularizer(out.attribute_attention, out.words)},
  };
  LossBreakdown result;
  std::vector<nn::Var> weighted;
  const auto& names = loss_component_names();
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto& [w, term] = parts[i];
    if (w == 0.0) {
      result.components[names[i]] = 0.0;
      continue;
    }
    const nn::Var scaled = nn::affine(term, w, 0.0);
    result.components[names[i]] = scaled.item();
    weighted.push_back(scaled);
  }
  result.total = sum_or_zero(weighted);
  return result;
}

// Teacher forcing ------------------------------------------------------------------

TeacherForcedOutputs teacher_forced(const Text2SceneModel& model, const TrainingExample& example,
                                    const TrainingContext& context, nn::Rng& rng) {
  require(context.builder != nullptr, ErrorCode::kInvalidArgument, "no canvas builder");
  const Scene& scene = example.scene;
  require(scene.task == model.config().task, ErrorCode::kInvalidArgument,
          "example '" + example.id + "' has the wrong task");
  const TokenSeq seq = model.tokens(example.caption);
  const TextFeatures text = model.encode_text(seq.ids);
  const AttributeSpaces& spaces = model.spaces();

  TeacherForcedOutputs out;
  out.words = text.length;
  DecoderState state = model.initial_state(text);
  Canvas canvas = context.builder->empty();
  const std::size_t steps = scene.objects.size();
  for (std::size_t t = 0; t <= steps; ++t) {
    state.hidden = model.advance(state.hidden, canvas.tensor);
    const ObjectPrediction obj = model.object_decoder().step(state, text);
    const int target = t < steps ? scene.objects[t].category : Vocabulary::kEos;
    out.object_probs.push_back(obj.probs);
    out.object_targets.push_back(target);
    out.object_attention.push_back(obj.attention);
    if (t < steps) {
      const ObjectToken& token = scene.objects[t];
      const AttributeOutput attr = model.attribute_decoder().step(state, text, target);
      out.attribute_heads.push_back(attr.head);
      out.attribute_attention.push_back(attr.attention);
      out.targets.push_back(token);
      if (spaces.appearance_dim > 0 && model.patch_net() && context.patches && token.patch_id) {
        const int b = appearance_offset(spaces);
        const nn::Var q = nn::l2_normalize(nn::cell_vector(
            nn::slice(attr.head, b, b + spaces.appearance_dim), token.cell.row, token.cell.col));
        const PatchRecord& positive = context.patches->get(*token.patch_id);
        try {
          const PatchRecord& negative =
              sample_negative(*context.patches, positive.category, positive.id, rng);
          const nn::Var fp = (*model.patch_net())(positive);
          const nn::Var fn = (*model.patch_net())(negative);
          out.triplets.push_back(nn::sub(nn::l2_norm(nn::sub(q, fp)), nn::l2_norm(nn::sub(q, fn))));
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kNoNegativeAvailable) throw;
        }
      }
      context.builder->place(canvas, token);
    }
    state.previous_object = target;
  }
  return out;
}

// Optimization ---------------------------------------------------------------------

double gradient_norm(const std::vector<nn::Var>& params) {
  double ss = 0;
  for (const auto& p : params) {
    for (double g : p.grad()) ss += g * g;
  }
  return std::sqrt(ss);
}

double clip_gradients(const std::vector<nn::Var>& params, double max_norm) {
  require(max_norm > 0, ErrorCode::kInvalidArgument, "clip norm must be positive");
  const double norm = gradient_norm(params);
  if (norm > max_norm && std::isfinite(norm)) {
    const double scale = max_norm / norm;
    for (const auto& p : params) {
      auto& g = const_cast<nn::Var&>(p).mutable_grad();
      for (double& v : g) v *= scale;
    }
  }
  return norm;
}

void Adam::step(const std::vector<nn::Var>& params, double lr) {
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p.size(), 0.0);
      v_.emplace_back(p.size(), 0.0);
    }
  }
  require(m_.size() == params.size(), ErrorCode::kInvalidArgument,
          "optimizer parameter list changed");
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& g = params[i].grad();
    if (g.empty()) continue;
    auto& w = const_cast<nn::Var&>(params[i]).mutable_value();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = config_.beta1 * m[j] + (1 - config_.beta1) * g[j];
      v[j] = config_.beta2 * v[j] + (1 - config_.beta2) * g[j] * g[j];
      w[j] -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + config_.epsilon);
    }
  }
}

namespace {

LossBreakdown example_loss(const Text2SceneModel& model, const TrainingExample& example,
                           const TrainingContext& context, const LossWeights& weights,
                           nn::Rng& rng) {
  const TeacherForcedOutputs out = teacher_forced(model, example, context, rng);
  return total_loss(out, model.spaces(), model.vocab(), weights);
}

void write_nan_dump(const std::filesystem::path& dir, const std::vector<const TrainingExample*>& batch,
                    const std::map<std::string, double>& components, int epoch, long step) {
  if (dir.empty()) return;
  std::filesystem::create_directories(dir);
  json j;
  j["epoch"] = epoch;
  j["step"] = step;
  j["components"] = components;
  json examples = json::array();
  for (const auto* e : batch) examples.push_back({{"id", e->id}, {"caption", e->caption}});
  j["batch"] = examples;
  std::ofstream(dir / "nan_dump.json") << j.dump(2) << "\n";
}

}  // namespace

double evaluate_loss(const Text2SceneModel& model, const std::vector<TrainingExample>& examples,
                     const TrainingContext& context, const LossWeights& weights,
                     std::uint64_t seed) {
  if (examples.empty()) return 0.0;
  nn::NoGradGuard guard;
  nn::Rng rng(seed);
  double total = 0;
  for (const auto& e : examples) total += example_loss(model, e, context, weights, rng).total.item();
  return total / static_cast<double>(examples.size());
}

TrainResult train(Text2SceneModel& model, const std::vector<TrainingExample>& train_set,
                  const std::vector<TrainingExample>& val_set, const TrainingContext& context,
                  const TrainConfig& config) {
  require(!train_set.empty(), ErrorCode::kInvalidArgument, "training set is empty");
  require(config.batch_size >= 1 && config.epochs >= 1 && config.patience >= 1,
          ErrorCode::kInvalidArgument, "batch size, epochs and patience must be positive");
  const auto log = [&](const std::string& line) {
    if (config.log) config.log(line);
  };
  std::ofstream log_file;
  if (!config.output_dir.empty()) {
    std::filesystem::create_directories(config.output_dir);
    log_file.open(config.output_dir / "train_log.jsonl");
    require(log_file.good(), ErrorCode::kIoError, "cannot write the training log");
    log_file << json{{"format", "text2scene.trainlog"}, {"version", 1},
                     {"config_hash", config.config_hash}, {"seed", config.seed}}
                    .dump()
             << "\n";
  }

  const std::vector<nn::Var> params = model.parameters().trainable();
  Adam adam(config.optimizer);
  nn::Rng rng(config.seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  long step = 0;
  int since_best = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = learning_rate(config.optimizer, epoch);
    if (config.shuffle) std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      if (config.max_steps > 0 && step >= config.max_steps) break;
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      std::vector<const TrainingExample*> batch;
      std::map<std::string, double> components;
      double batch_loss = 0;
      model.parameters().zero_grad();
      for (std::size_t i = start; i < end; ++i) {
        const TrainingExample& e = train_set[order[i]];
        batch.push_back(&e);
        LossBreakdown loss = example_loss(model, e, context, config.weights, rng);
        for (const auto& [k, v] : loss.components) components[k] += v * scale;
        const double value = loss.total.item();
        if (!std::isfinite(value)) {
          write_nan_dump(config.output_dir, batch, components, epoch, step);
          fail(ErrorCode::kNumericalError, "non-finite loss on example '" + e.id + "' at step " +
                                               std::to_string(step));
        }
        batch_loss += value * scale;
        if (loss.total.requires_grad()) nn::affine(loss.total, scale, 0.0).backward();
      }
      const double norm = clip_gradients(params, config.optimizer.clip_norm);
      if (!std::isfinite(norm)) {
        write_nan_dump(config.output_dir, batch, components, epoch, step);
        fail(ErrorCode::kNumericalError, "non-finite gradient at step " + std::to_string(step));
      }
      adam.step(params, lr);
      ++step;
      result.step_losses.push_back(batch_loss);
      epoch_loss += batch_loss * static_cast<double>(end - start);
      seen += end - start;
      if (log_file.is_open()) {
        log_file << json{{"type", "step"}, {"epoch", epoch}, {"step", step}, {"loss", batch_loss},
                         {"lr", lr}, {"grad_norm", norm}, {"components", components}}
                        .dump()
                 << "\n";
      }
    }
    model.parameters().zero_grad();
    if (seen == 0) break;

    EpochMetrics m;
    m.epoch = epoch;
    m.learning_rate = lr;
    m.train_loss = epoch_loss / static_cast<double>(seen);
    m.val_loss = val_set.empty() ? m.train_loss
                                 : evaluate_loss(model, val_set, context, config.weights,
                                                 config.seed);
    m.steps = step;
    result.epochs.push_back(m);
    std::ostringstream line;
    line << "epoch " << epoch << " lr " << lr << " train " << m.train_loss << " val "
         << m.val_loss << " steps " << step;
    log(line.str());
    if (log_file.is_open()) {
      log_file << json{{"type", "epoch"}, {"epoch", epoch}, {"lr", lr},
                       {"train_loss", m.train_loss}, {"val_loss", m.val_loss}, {"steps", step}}
                      .dump()
               << "\n";
    }

    const bool improved = result.best_epoch < 0 || m.val_loss < result.best_val_loss;
    if (improved) {
      result.best_epoch = epoch;
      result.best_val_loss = m.val_loss;
      since_best = 0;
    } else {
      ++since_best;
    }
    if (!config.output_dir.empty()) {
      CheckpointMeta meta;
      meta.config_hash = config.config_hash;
      meta.seed = config.seed;
      meta.epoch = epoch;
      meta.metrics = {{"train_loss", m.train_loss}, {"val_loss", m.val_loss},
                      {"learning_rate", lr}, {"steps", static_cast<double>(step)}};
      meta.config_snapshot = config.config_snapshot;
      char name[32];
      std::snprintf(name, sizeof name, "epoch_%03d.ckpt", epoch);
      save_checkpoint(config.output_dir / name, model, meta);
      if (improved) {
        result.best_checkpoint = config.output_dir / "best.ckpt";
        save_checkpoint(result.best_checkpoint, model, meta);
      }
    }
    if (since_best >= config.patience) {
      result.stopped_early = true;
      log("validation loss stopped improving; stopping");
      break;
    }
    if (config.max_steps > 0 && step >= config.max_steps) break;
  }
  return result;
}

}  // namespace text2scene
