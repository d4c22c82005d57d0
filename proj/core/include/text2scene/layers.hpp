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
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "text2scene/autograd.hpp"

namespace text2scene::nn {

using Rng = std::mt19937_64;

/// Owns every trainable tensor of a model under a unique dotted name.
/// Registration order is stable, which makes checkpoints and optimizer
/// state line up across runs.
class ParameterStore {
 public:
  Var create(const std::string& name, Shape shape, std::vector<double> values,
             bool trainable = true);
  // Uniform(-bound, bound) initialization.
  Var create_uniform(const std::string& name, Shape shape, double bound, Rng& rng,
                     bool trainable = true);

  const std::vector<std::pair<std::string, Var>>& entries() const { return entries_; }
  std::vector<Var> trainable() const;
  std::optional<Var> find(const std::string& name) const;
  void set_trainable(const std::string& name, bool trainable);
  bool is_trainable(const std::string& name) const;
  std::size_t scalar_count() const;
  void zero_grad();

 private:
  std::vector<std::pair<std::string, Var>> entries_;
  std::vector<bool> trainable_;
};

enum class Activation { kNone, kRelu, kLeakyRelu };
Var activate(const Var& x, Activation act);

struct Linear {
  Linear() = default;
  Linear(ParameterStore& store, const std::string& name, int in, int out, Rng& rng);
  Var operator()(const Var& x) const { return linear(x, weight, bias); }

  Var weight;
  Var bias;
};

struct Conv2d {
  Conv2d() = default;
  // padding < 0 selects "same" padding for odd kernels at stride 1.
  Conv2d(ParameterStore& store, const std::string& name, int in, int out, int kernel,
         Rng& rng, int stride = 1, int padding = -1, int groups = 1);
  Var operator()(const Var& x) const { return conv2d(x, weight, bias, options); }

  Var weight;
  Var bias;
  Conv2dOptions options;
};

/// Vector GRU cell. Gate order in the stacked weights is (reset, update,
/// candidate); the update gate z blends as h' = (1 - z) * h + z * n.
struct GruCell {
  GruCell() = default;
  GruCell(ParameterStore& store, const std::string& name, int input_size, int hidden_size,
          Rng& rng);
  Var step(const Var& x, const Var& h) const;

  Linear input;
  Linear hidden;
  int hidden_size = 0;
};

/// Convolutional GRU: the same gating as GruCell, computed per spatial cell
/// with 3x3 same-padded convolutions over [x; h].
struct ConvGruCell {
  struct Gates {
    Var reset;
    Var update;
    Var candidate;
    Var hidden;
  };

  ConvGruCell() = default;
  ConvGruCell(ParameterStore& store, const std::string& name, int input_channels,
              int hidden_channels, Rng& rng, int kernel = 3);
  Var step(const Var& x, const Var& h) const { return step_with_gates(x, h).hidden; }
  Gates step_with_gates(const Var& x, const Var& h) const;

  Conv2d gates;
  Conv2d candidate;
  int hidden_channels = 0;
};

/// Two 3x3 convolutions plus a skip path. The skip is the identity when
/// shapes agree, otherwise a strided 1x1 convolution. Every convolution is
/// followed by the activation.
struct ResidualBlock {
  ResidualBlock() = default;
  ResidualBlock(ParameterStore& store, const std::string& name, int in, int out, int stride,
                Activation act, Rng& rng);
  Var operator()(const Var& x) const;

  Conv2d first;
  Conv2d second;
  std::optional<Conv2d> skip;
  Activation act = Activation::kRelu;
};

}  // namespace text2scene::nn
