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
#include <fstream>
#include <limits>

#include "doctest.h"
#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "json.hpp"
#include "text2scene/error.hpp"
#include "text2scene/training.hpp"

using namespace text2scene;
using nn::Var;

namespace {

Var random_param(nn::Shape shape, nn::Rng& rng) {
  std::normal_distribution<double> d;
  std::vector<double> v(nn::numel(shape));
  for (auto& x : v) x = d(rng);
  return Var::parameter(std::move(shape), std::move(v));
}

double log_softmax_at(const std::vector<double>& logits, int k) {
  double m = logits[0];
  for (double x : logits) m = std::max(m, x);
  double s = 0;
  for (double x : logits) s += std::exp(x - m);
  return logits[k] - m - std::log(s);
}

struct FixtureRun {
  FixtureRun()
      : examples(testing::abstract_fixture({.scenes = 6, .seed = 2})),
        model(ModelConfig::compact(TaskKind::kAbstract), Vocabulary::for_task(TaskKind::kAbstract),
              caption_vocabulary(examples), 3) {
    auto builder = std::make_shared<CanvasBuilder>(TaskKind::kAbstract, model.vocab(),
                                                   model.config().canvas);
    builder->set_assets(std::make_shared<AssetLibrary>(AssetLibrary::synthetic(model.vocab())));
    context.builder = builder;
  }
  std::vector<TrainingExample> examples;
  Text2SceneModel model;
  TrainingContext context;
};

}  // namespace

TEST_CASE("learning rate schedule") {
  OptimizerConfig c;
  CHECK(learning_rate(c, 0) == 5e-5);
  CHECK(learning_rate(c, 2) == 5e-5);
  CHECK(learning_rate(c, 3) == doctest::Approx(4e-5).epsilon(1e-12));
  CHECK(learning_rate(c, 6) == doctest::Approx(5e-5 * 0.64).epsilon(1e-12));
  CHECK(learning_rate(c, 29) == doctest::Approx(5e-5 * std::pow(0.8, 9)).epsilon(1e-12));
}

TEST_CASE("attention regularizer closed form") {
  // Column sums 0.5 and 1.5 give (1 - 0.5)^2 + (1 - 1.5)^2.
  const Var a = Var::constant({2}, {0.25, 1.0});
  const Var b = Var::constant({2}, {0.25, 0.5});
  CHECK(attention_regularizer({a, b}, 2).item() == doctest::Approx(0.5));
  CHECK(attention_regularizer({}, 3).item() == doctest::Approx(3.0));
  CHECK_THROWS_AS(attention_regularizer({a}, 3), Error);
}

TEST_CASE("uniform object distribution costs ln 10") {
  TeacherForcedOutputs out;
  out.object_probs = {Var::constant({10}, std::vector<double>(10, 0.1))};
  out.object_targets = {4};
  LossWeights w;
  w.object = 1.0;
  const auto spaces = AttributeSpaces::for_task(TaskKind::kAbstract);
  const LossBreakdown l = total_loss(out, spaces, Vocabulary::for_task(TaskKind::kAbstract), w);
  CHECK(l.total.item() == doctest::Approx(std::log(10.0)));
  CHECK(l.components.size() == 6);
  CHECK(l.components.at("object") == doctest::Approx(std::log(10.0)));
}

TEST_CASE("total loss matches a hand-computed oracle and its gradient") {
  nn::Rng rng(8);
  const Vocabulary vocab = Vocabulary::custom(TaskKind::kAbstract, {"ball", "mike"}, {"mike"});
  const auto spaces = AttributeSpaces::for_task(TaskKind::kAbstract);
  const int C = spaces.head_channels();
  Var probs_logits = random_param({5}, rng);
  Var head0 = random_param({C, 4, 4}, rng);
  Var head1 = random_param({C, 4, 4}, rng);
  Var att0 = random_param({3}, rng);
  Var att1 = random_param({3}, rng);

  ObjectToken ball{3, {1, 2}, {2, 1, 6, 4}, {}, {}};
  ObjectToken mike{4, {3, 0}, {0, 0, 5, 3}, {}, {}};
  const LossWeights w = LossWeights::for_task(TaskKind::kAbstract);

  const auto build = [&] {
    TeacherForcedOutputs out;
    const Var p = nn::softmax(probs_logits);
    out.object_probs = {p, p, p};
    out.object_targets = {3, 4, Vocabulary::kEos};
    out.attribute_heads = {head0, head1};
    out.targets = {ball, mike};
    out.object_attention = {nn::softmax(att0), nn::softmax(att1)};
    out.attribute_attention = {nn::softmax(att1)};
    out.words = 3;
    return out;
  };
  const LossBreakdown l = total_loss(build(), spaces, vocab, w);

  const auto& pl = probs_logits.value();
  double object = -(log_softmax_at(pl, 3) + log_softmax_at(pl, 4) + log_softmax_at(pl, 2));
  double location = 0, attributes = 0;
  const ObjectToken* tokens[2] = {&ball, &mike};
  const Var* heads[2] = {&head0, &head1};
  for (int t = 0; t < 2; ++t) {
    const auto& h = heads[t]->value();
    std::vector<double> loc(h.begin(), h.begin() + 16);
    location -= log_softmax_at(loc, tokens[t]->cell.row * 4 + tokens[t]->cell.col);
    int offset = 1;
    for (std::size_t k = 0; k < spaces.discrete.size(); ++k) {
      const int n = spaces.discrete[k].cardinality;
      const bool applies = !spaces.discrete[k].person_only || tokens[t]->category == 4;
      if (applies) {
        std::vector<double> logits;
        for (int c = 0; c < n; ++c) {
          logits.push_back(h[(offset + c) * 16 + tokens[t]->cell.row * 4 + tokens[t]->cell.col]);
        }
        attributes -= w.attribute(spaces.discrete[k].name) * log_softmax_at(logits, tokens[t]->attributes[k]);
      }
      offset += n;
    }
  }
  const auto sm = [](const Var& v) { return nn::softmax(v).value(); };
  double reg_o = 0, reg_a = 0;
  for (int m = 0; m < 3; ++m) {
    reg_o += std::pow(1 - sm(att0)[m] - sm(att1)[m], 2);
    reg_a += std::pow(1 - sm(att1)[m], 2);
  }
  const double expected = w.object * object + w.location * location + attributes +
                          w.attention_object * reg_o + w.attention_attribute * reg_a;
  CHECK(l.total.item() == doctest::Approx(expected).epsilon(1e-10));
  CHECK(l.components.at("object") == doctest::Approx(w.object * object));
  CHECK(l.components.at("location") == doctest::Approx(w.location * location));
  CHECK(l.components.at("attributes") == doctest::Approx(attributes));

  const auto r = testing::check_gradients(
      [&] { return total_loss(build(), spaces, vocab, w).total; },
      {probs_logits, head0, head1, att0, att1});
  CHECK(r.max_relative_error < 1e-5);
}

TEST_CASE("triplet hinge uses the configured margin") {
  TeacherForcedOutputs out;
  out.triplets = {Var::scalar(-0.3), Var::scalar(-0.9)};
  LossWeights w;
  w.triplet = 10.0;
  w.margin = 0.5;
  const auto l = total_loss(out, AttributeSpaces::for_task(TaskKind::kComposite),
                            Vocabulary::for_task(TaskKind::kComposite), w);
  CHECK(l.total.item() == doctest::Approx(2.0));
  CHECK(l.components.at("triplet") == doctest::Approx(2.0));
}

TEST_CASE("loss weights configuration") {
  const LossWeights a = LossWeights::for_task(TaskKind::kAbstract);
  CHECK(a.object == 8);
  CHECK(a.location == 2);
  CHECK(a.attribute("pose") == 2);
  CHECK(a.attribute("size") == 1);
  const LossWeights c = LossWeights::for_task(TaskKind::kComposite);
  CHECK(c.triplet == 10);
  CHECK(c.margin == 0.5);
  CHECK(c.attention_attribute == 0);
  KeyValues kv;
  c.write(kv);
  kv.set("loss.object", "3.5");
  const LossWeights back = LossWeights::read(kv, TaskKind::kComposite);
  CHECK(back.object == 3.5);
  CHECK(back.attributes == c.attributes);
  kv.set("loss.location", "-1");
  CHECK_THROWS_AS(LossWeights::read(kv, TaskKind::kComposite), Error);
  KeyValues unknown;
  unknown.set("loss.attribute.color", "1");
  CHECK_THROWS_AS(LossWeights::read(unknown, TaskKind::kLayout), Error);
}

TEST_CASE("gradient clipping and adam") {
  Var p = Var::parameter({2}, {1.0, -1.0});
  nn::sum(nn::mul(p, Var::constant({2}, {30.0, 40.0}))).backward();
  CHECK(gradient_norm({p}) == doctest::Approx(50.0));
  CHECK(clip_gradients({p}, 10.0) == doctest::Approx(50.0));
  CHECK(p.grad()[0] == doctest::Approx(6.0));
  CHECK(p.grad()[1] == doctest::Approx(8.0));
  Adam adam(OptimizerConfig{});
  adam.step({p}, 0.1);
  // The first bias-corrected step moves every coordinate by about lr.
  CHECK(p[0] == doctest::Approx(0.9).epsilon(1e-6));
  CHECK(p[1] == doctest::Approx(-1.1).epsilon(1e-6));
  CHECK(adam.steps() == 1);
}

TEST_CASE("teacher forcing covers every object plus eos") {
  FixtureRun run;
  nn::Rng rng(1);
  const auto& e = run.examples[0];
  const TeacherForcedOutputs out = teacher_forced(run.model, e, run.context, rng);
  const std::size_t T = e.scene.objects.size();
  CHECK(out.object_probs.size() == T + 1);
  CHECK(out.object_targets.back() == Vocabulary::kEos);
  CHECK(out.attribute_heads.size() == T);
  CHECK(out.words == static_cast<int>(run.model.tokens(e.caption).ids.size()));
  CHECK(out.triplets.empty());
}

TEST_CASE("training is deterministic and writes its artifacts") {
  testing::TempDir dir;
  const auto run_once = [](const std::filesystem::path& out) {
    FixtureRun run;
    TrainConfig tc;
    tc.weights = LossWeights::for_task(TaskKind::kAbstract);
    tc.optimizer.learning_rate = 1e-3;
    tc.epochs = 2;
    tc.batch_size = 2;
    tc.seed = 17;
    tc.config_hash = "feedface";
    tc.output_dir = out;
    const std::vector<TrainingExample> train_set(run.examples.begin(), run.examples.begin() + 4);
    const std::vector<TrainingExample> val_set(run.examples.begin() + 4, run.examples.end());
    return train(run.model, train_set, val_set, run.context, tc);
  };
  const TrainResult a = run_once(dir / "a");
  const TrainResult b = run_once(dir / "b");
  REQUIRE(a.step_losses.size() == 4);
  CHECK(a.step_losses == b.step_losses);
  CHECK(a.epochs.size() == 2);
  CHECK(a.epochs[1].val_loss == b.epochs[1].val_loss);
  CHECK(std::filesystem::exists(dir / "a" / "epoch_000.ckpt"));
  CHECK(std::filesystem::exists(dir / "a" / "epoch_001.ckpt"));
  CHECK(std::filesystem::exists(a.best_checkpoint));

  std::ifstream log(dir / "a" / "train_log.jsonl");
  std::string line;
  REQUIRE(std::getline(log, line));
  const auto header = nlohmann::json::parse(line);
  CHECK(header.at("format") == "text2scene.trainlog");
  CHECK(header.at("config_hash") == "feedface");
  CHECK(header.at("seed") == 17);
  int steps = 0;
  while (std::getline(log, line)) steps += nlohmann::json::parse(line).at("type") == "step";
  CHECK(steps == 4);
}

TEST_CASE("max steps stops training") {
  FixtureRun run;
  TrainConfig tc;
  tc.weights = LossWeights::for_task(TaskKind::kAbstract);
  tc.epochs = 5;
  tc.batch_size = 1;
  tc.max_steps = 3;
  const TrainResult r = train(run.model, run.examples, {}, run.context, tc);
  CHECK(r.step_losses.size() == 3);
}

TEST_CASE("a non-finite loss stops training with a dump") {
  FixtureRun run;
  for (const auto& [name, v] : run.model.parameters().entries()) {
    if (name.rfind("object.", 0) == 0) {
      for (auto& x : Var(v).mutable_value()) x = std::numeric_limits<double>::quiet_NaN();
      break;
    }
  }
  testing::TempDir dir;
  TrainConfig tc;
  tc.weights = LossWeights::for_task(TaskKind::kAbstract);
  tc.output_dir = dir.path();
  tc.epochs = 1;
  try {
    train(run.model, run.examples, {}, run.context, tc);
    FAIL("expected a numerical error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNumericalError);
  }
  std::ifstream dump(dir / "nan_dump.json");
  REQUIRE(dump.good());
  const auto j = nlohmann::json::parse(dump);
  CHECK(j.contains("batch"));
}
