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

#include "text2scene/layers.hpp"

#include <cmath>

#include "text2scene/error.hpp"

namespace text2scene::nn {

Var ParameterStore::create(const std::string& name, Shape shape, std::vector<double> values,
                           bool trainable) {
  require(!find(name).has_value(), ErrorCode::kInvalidArgument,
          "duplicate parameter name '" + name + "'");
  Var v = Var::parameter(std::move(shape), std::move(values));
  // Frozen tensors stay out of the tape entirely.
  v.node()->requires_grad = trainable;
  entries_.emplace_back(name, v);
  trainable_.push_back(trainable);
  return v;
}

Var ParameterStore::create_uniform(const std::string& name, Shape shape, double bound, Rng& rng,
                                   bool trainable) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> values(numel(shape));
  for (auto& v : values) v = dist(rng);
  return create(name, std::move(shape), std::move(values), trainable);
}

std::vector<Var> ParameterStore::trainable() const {
  std::vector<Var> out;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (trainable_[i]) out.push_back(entries_[i].second);
  }
  return out;
}

std::optional<Var> ParameterStore::find(const std::string& name) const {
  for (const auto& [n, v] : entries_) {
    if (n == name) return v;
  }
  return std::nullopt;
}

void ParameterStore::set_trainable(const std::string& name, bool trainable) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].first == name) {
      trainable_[i] = trainable;
      entries_[i].second.node()->requires_grad = trainable;
      return;
    }
  }
  fail(ErrorCode::kInvalidArgument, "unknown parameter '" + name + "'");
}

bool ParameterStore::is_trainable(const std::string& name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].first == name) return trainable_[i];
  }
  return false;
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, v] : entries_) n += v.size();
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& [name, v] : entries_) v.zero_grad();
}

Var activate(const Var& x, Activation act) {
  switch (act) {
    case Activation::kNone: return x;
    case Activation::kRelu: return relu(x);
    case Activation::kLeakyRelu: return leaky_relu(x, 0.2);
  }
  return x;
}

Linear::Linear(ParameterStore& store, const std::string& name, int in, int out, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  weight = store.create_uniform(name + ".weight", {out, in}, bound, rng);
  bias = store.create_uniform(name + ".bias", {out}, bound, rng);
}

Conv2d::Conv2d(ParameterStore& store, const std::string& name, int in, int out, int kernel,
               Rng& rng, int stride, int padding, int groups) {
  require(in % groups == 0 && out % groups == 0, ErrorCode::kInvalidArgument,
          name + ": channels not divisible by groups");
  options.stride = stride;
  options.padding = padding < 0 ? kernel / 2 : padding;
  options.groups = groups;
  const int fan_in = in / groups * kernel * kernel;
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  weight = store.create_uniform(name + ".weight", {out, in / groups, kernel, kernel}, bound, rng);
  bias = store.create_uniform(name + ".bias", {out}, bound, rng);
}

GruCell::GruCell(ParameterStore& store, const std::string& name, int input_size,
                 int hidden_size_, Rng& rng)
    : input(store, name + ".input", input_size, 3 * hidden_size_, rng),
      hidden(store, name + ".hidden", hidden_size_, 3 * hidden_size_, rng),
      hidden_size(hidden_size_) {}

Var GruCell::step(const Var& x, const Var& h) const {
  const int n = hidden_size;
  const Var gi = input(x);
  const Var gh = hidden(h);
  const Var r = sigmoid(add(slice(gi, 0, n), slice(gh, 0, n)));
  const Var z = sigmoid(add(slice(gi, n, 2 * n), slice(gh, n, 2 * n)));
  const Var cand = tanh(add(slice(gi, 2 * n, 3 * n), mul(r, slice(gh, 2 * n, 3 * n))));
  return add(mul(affine(z, -1.0, 1.0), h), mul(z, cand));
}

ConvGruCell::ConvGruCell(ParameterStore& store, const std::string& name, int input_channels,
                         int hidden_channels_, Rng& rng, int kernel)
    : gates(store, name + ".gates", input_channels + hidden_channels_, 2 * hidden_channels_,
            kernel, rng),
      candidate(store, name + ".candidate", input_channels + hidden_channels_, hidden_channels_,
                kernel, rng),
      hidden_channels(hidden_channels_) {}

ConvGruCell::Gates ConvGruCell::step_with_gates(const Var& x, const Var& h) const {
  require(x.rank() == 3 && h.rank() == 3 && x.dim(1) == h.dim(1) && x.dim(2) == h.dim(2) &&
              h.dim(0) == hidden_channels,
          ErrorCode::kInvalidArgument,
          "ConvGRU: input " + shape_string(x.shape()) + " and hidden " + shape_string(h.shape()) +
              " disagree");
  require(x.dim(0) + hidden_channels == gates.weight.dim(1), ErrorCode::kInvalidArgument,
          "ConvGRU: expected " + std::to_string(gates.weight.dim(1) - hidden_channels) +
              " input channels, got " + std::to_string(x.dim(0)));
  const int n = hidden_channels;
  Gates g;
  const Var rz = sigmoid(gates(concat({x, h})));
  g.reset = slice(rz, 0, n);
  g.update = slice(rz, n, 2 * n);
  g.candidate = tanh(candidate(concat({x, mul(g.reset, h)})));
  g.hidden = add(mul(affine(g.update, -1.0, 1.0), h), mul(g.update, g.candidate));
  return g;
}

ResidualBlock::ResidualBlock(ParameterStore& store, const std::string& name, int in, int out,
                             int stride, Activation act_, Rng& rng)
    : first(store, name + ".conv1", in, out, 3, rng, stride, 1),
      second(store, name + ".conv2", out, out, 3, rng, 1, 1),
      act(act_) {
  if (stride != 1 || in != out) skip.emplace(store, name + ".skip", in, out, 1, rng, stride, 0);
}

Var ResidualBlock::operator()(const Var& x) const {
  const Var y = activate(second(activate(first(x), act)), act);
  const Var s = skip ? activate((*skip)(x), act) : x;
  return add(y, s);
}

}  // namespace text2scene::nn
