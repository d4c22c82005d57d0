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

#include "doctest.h"
#include "gradcheck.hpp"
#include "text2scene/error.hpp"
#include "text2scene/layers.hpp"

using namespace text2scene;
using nn::Var;

TEST_CASE("parameter store registration") {
  nn::ParameterStore store;
  nn::Rng rng(1);
  nn::Linear lin(store, "a", 3, 2, rng);
  CHECK(store.entries().size() == 2);
  CHECK(store.entries()[0].first == "a.weight");
  CHECK(store.scalar_count() == 8);
  CHECK_THROWS_AS(store.create("a.bias", {1}, {0}), Error);
  store.set_trainable("a.weight", false);
  CHECK(store.trainable().size() == 1);
  CHECK_FALSE(store.is_trainable("a.weight"));
  CHECK(lin(Var::constant({3}, {1, 2, 3})).requires_grad());
  CHECK_THROWS_AS(store.set_trainable("missing", true), Error);
}

TEST_CASE("GRU cell follows the gate equations") {
  nn::ParameterStore store;
  nn::Rng rng(2);
  nn::GruCell cell(store, "g", 2, 3, rng);
  const Var x = Var::constant({2}, {0.3, -0.7});
  const Var h = Var::constant({3}, {0.1, 0.2, -0.4});
  const Var out = cell.step(x, h);
  const auto& Wi = cell.input.weight.value();
  const auto& bi = cell.input.bias.value();
  const auto& Wh = cell.hidden.weight.value();
  const auto& bh = cell.hidden.bias.value();
  auto gi = [&](int r) { return Wi[r * 2] * x[0] + Wi[r * 2 + 1] * x[1] + bi[r]; };
  auto gh = [&](int r) { return Wh[r * 3] * h[0] + Wh[r * 3 + 1] * h[1] + Wh[r * 3 + 2] * h[2] + bh[r]; };
  auto sig = [](double v) { return 1 / (1 + std::exp(-v)); };
  for (int k = 0; k < 3; ++k) {
    const double r = sig(gi(k) + gh(k));
    const double z = sig(gi(3 + k) + gh(3 + k));
    const double n = std::tanh(gi(6 + k) + r * gh(6 + k));
    CHECK(out[k] == doctest::Approx((1 - z) * h[k] + z * n).epsilon(1e-12));
  }
}

TEST_CASE("ConvGRU step gradients match finite differences") {
  nn::ParameterStore store;
  nn::Rng rng(3);
  nn::ConvGruCell cell(store, "cg", 3, 4, rng);
  std::uniform_real_distribution<double> d(-1, 1);
  std::vector<double> xv(3 * 5 * 5), hv(4 * 5 * 5);
  for (auto& v : xv) v = d(rng);
  for (auto& v : hv) v = d(rng);
  Var x = Var::parameter({3, 5, 5}, xv), h = Var::parameter({4, 5, 5}, hv);
  std::vector<Var> inputs = {x, h};
  for (const auto& [name, v] : store.entries()) inputs.push_back(v);
  const auto r = testing::check_gradients(
      [&] { return nn::sum(nn::square(cell.step(x, h))); }, inputs);
  CHECK(r.max_relative_error < 1e-3);
  CHECK(r.checked > 100);
}

TEST_CASE("ConvGRU gates: update 0 keeps the state") {
  nn::ParameterStore store;
  nn::Rng rng(4);
  nn::ConvGruCell cell(store, "cg", 1, 2, rng);
  // A very negative update bias closes the update gate.
  auto& bias = cell.gates.bias.mutable_value();
  bias[2] = bias[3] = -100;
  const Var x = Var::constant({1, 3, 3}, std::vector<double>(9, 0.5));
  const Var h = Var::constant({2, 3, 3}, std::vector<double>(18, 0.25));
  const Var out = cell.step(x, h);
  for (double v : out.value()) CHECK(v == doctest::Approx(0.25));
}

TEST_CASE("residual block shapes") {
  nn::ParameterStore store;
  nn::Rng rng(5);
  nn::ResidualBlock same(store, "r1", 4, 4, 1, nn::Activation::kRelu, rng);
  nn::ResidualBlock down(store, "r2", 4, 8, 2, nn::Activation::kLeakyRelu, rng);
  CHECK_FALSE(same.skip.has_value());
  CHECK(down.skip.has_value());
  const Var x = Var::constant({4, 8, 8}, std::vector<double>(256, 0.1));
  CHECK(same(x).shape() == nn::Shape{4, 8, 8});
  CHECK(down(x).shape() == nn::Shape{8, 4, 4});
}
