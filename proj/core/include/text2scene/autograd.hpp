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

// Minimal reverse-mode automatic differentiation over dense double tensors.
//
// A Var is a shared handle to a graph node. Operations record their inputs
// and a backward closure while gradient recording is enabled; calling
// backward() on a scalar result walks the graph in reverse topological order
// and accumulates gradients into every node that requires them. Parameters
// are long-lived Vars created with Var::parameter; their gradients persist
// until zero_grad() is called.
//
// Layout conventions: feature maps are [C, H, W], matrices are [rows, cols],
// all storage is row-major.

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace text2scene::nn {

using Shape = std::vector<int>;

std::size_t numel(const Shape& shape);
std::string shape_string(const Shape& shape);

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  // Zero-initialized on first use.
  std::vector<double>& grad_buffer();
};

class Var {
 public:
  Var() = default;

  static Var constant(Shape shape, std::vector<double> values);
  static Var zeros(Shape shape);
  static Var scalar(double v);
  static Var parameter(Shape shape, std::vector<double> values);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  int dim(std::size_t axis) const;
  std::size_t rank() const;
  std::size_t size() const;

  const std::vector<double>& value() const;
  std::vector<double>& mutable_value();
  double operator[](std::size_t i) const { return value()[i]; }
  double item() const;

  bool requires_grad() const;
  // Empty until a backward pass reaches this node.
  const std::vector<double>& grad() const;
  std::vector<double>& mutable_grad();
  void zero_grad();

  void backward() const;

  const std::shared_ptr<Node>& node() const { return node_; }
  static Var from_node(std::shared_ptr<Node> node);

 private:
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}
  std::shared_ptr<Node> node_;
};

bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

struct Conv2dOptions {
  int stride = 1;
  int padding = 0;
  int groups = 1;
};

// Elementwise (identical shapes).
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var affine(const Var& a, double scale, double shift);
Var add_constant(const Var& a, const std::vector<double>& c);
Var sigmoid(const Var& a);
Var tanh(const Var& a);
Var relu(const Var& a);
Var leaky_relu(const Var& a, double slope);
// log(max(a, floor)); gradient is zero where the clamp is active.
Var log_clamped(const Var& a, double floor);
Var square(const Var& a);

// Reductions.
Var sum(const Var& a);
Var sum_all(const std::vector<Var>& terms);
Var pick(const Var& a, std::size_t index);
// Euclidean norm; gradient at the origin is taken as zero.
Var l2_norm(const Var& a);

// Shape manipulation (always along axis 0).
Var reshape(const Var& a, Shape shape);
Var concat(const std::vector<Var>& parts);
Var slice(const Var& a, int begin, int end);

// Linear algebra.
Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
// W [out, in] * x [in] + b [out]; b may be undefined.
Var linear(const Var& x, const Var& weight, const Var& bias);
// Rows of table [V, E] selected by ids -> [M, E].
Var gather_rows(const Var& table, const std::vector<int>& ids);

// Feature maps [C, H, W].
Var conv2d(const Var& x, const Var& weight, const Var& bias, Conv2dOptions options);
Var upsample_bilinear(const Var& x, int out_h, int out_w);
Var global_avg_pool(const Var& x);
Var broadcast_spatial(const Var& v, int h, int w);
Var cell_vector(const Var& x, int row, int col);
// out[c, p] = weights[0, p] * x[c, p]
Var scale_by_map(const Var& weights, const Var& x);

// Normalizers. softmax/log_softmax treat the input as one flat vector.
Var softmax(const Var& a);
Var log_softmax(const Var& a);
Var channel_softmax(const Var& x);
Var channel_log_softmax(const Var& x);
Var l2_normalize(const Var& a);
Var channel_l2_normalize(const Var& x);

}  // namespace text2scene::nn
