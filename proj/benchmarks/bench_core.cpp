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
#include <benchmark/benchmark.h>

#include <random>

#include "text2scene/metrics.hpp"
#include "text2scene/patch_embedding.hpp"

using namespace text2scene;

namespace {

nn::Var random_var(nn::Shape shape, nn::Rng& rng) {
  std::normal_distribution<double> d;
  std::vector<double> v(nn::numel(shape));
  for (auto& x : v) x = d(rng);
  return nn::Var::constant(std::move(shape), std::move(v));
}

void BM_Conv2d(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  nn::Rng rng(1);
  const nn::Var x = random_var({c, 28, 28}, rng);
  const nn::Var w = random_var({c, c, 3, 3}, rng);
  const nn::Var b = random_var({c}, rng);
  nn::NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(nn::conv2d(x, w, b, {1, 1, 1}).value().data());
}
BENCHMARK(BM_Conv2d)->Arg(16)->Arg(64);

void BM_ConvGruStepWithBackward(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  nn::Rng rng(2);
  nn::ParameterStore store;
  const nn::ConvGruCell cell(store, "gru", c, c, rng);
  const nn::Var x = random_var({c, 28, 28}, rng);
  const nn::Var h = random_var({c, 28, 28}, rng);
  for (auto _ : state) {
    store.zero_grad();
    nn::sum(cell.step(x, h)).backward();
  }
}
BENCHMARK(BM_ConvGruStepWithBackward)->Arg(16)->Arg(32);

void BM_Retrieve(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  nn::Rng rng(3);
  std::normal_distribution<double> d;
  PatchIndex index;
  for (int id = 0; id < n; ++id) {
    std::vector<double> v(kPatchEmbeddingDim);
    for (auto& x : v) x = d(rng);
    index.add(id, 3, std::move(v));
  }
  std::vector<double> q(kPatchEmbeddingDim);
  for (auto& x : q) x = d(rng);
  for (auto _ : state) benchmark::DoNotOptimize(index.retrieve(q, 3));
}
BENCHMARK(BM_Retrieve)->Arg(1000)->Arg(10000);

void BM_BobjPairs(benchmark::State& state) {
  const Vocabulary vocab = Vocabulary::for_task(TaskKind::kAbstract);
  const auto boxes =
      abstract_boxes(std::make_shared<AssetLibrary>(AssetLibrary::synthetic(vocab)), vocab);
  nn::Rng rng(4);
  std::uniform_int_distribution<int> category(Vocabulary::kNumSpecial, vocab.size() - 1), cell(0, 27);
  Scene s;
  for (int i = 0; i < state.range(0); ++i) {
    s.objects.push_back(ObjectToken{category(rng), {cell(rng), cell(rng)}, {0, 0, 0, 0}, {}, {}});
  }
  for (auto _ : state) benchmark::DoNotOptimize(bobj_pairs(s, boxes).size());
}
BENCHMARK(BM_BobjPairs)->Arg(10)->Arg(100);

}  // namespace

BENCHMARK_MAIN();
