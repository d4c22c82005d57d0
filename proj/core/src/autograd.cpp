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

#include "text2scene/autograd.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "text2scene/error.hpp"

namespace text2scene::nn {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

thread_local bool g_grad_enabled = true;

using BackwardFn = std::function<void(Node&)>;

Var make_result(Shape shape, std::vector<double> value, std::vector<Var> inputs,
                BackwardFn backward) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  bool needs = false;
  if (g_grad_enabled) {
    for (const auto& in : inputs) needs = needs || in.requires_grad();
  }
  if (needs) {
    node->requires_grad = true;
    node->inputs.reserve(inputs.size());
    for (const auto& in : inputs) node->inputs.push_back(in.node());
    node->backward = std::move(backward);
  }
  return Var::from_node(std::move(node));
}

void check_same_shape(const Var& a, const Var& b, const char* op) {
  require(a.shape() == b.shape(), ErrorCode::kInvalidArgument,
          std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
              shape_string(b.shape()));
}

void check_rank(const Var& a, std::size_t rank, const char* op) {
  require(a.rank() == rank, ErrorCode::kInvalidArgument,
          std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
              shape_string(a.shape()));
}

Node& input(Node& self, std::size_t i) { return *self.inputs[i]; }

template <typename Fwd, typename Deriv>
Var unary(const Var& a, Fwd fwd, Deriv deriv) {
  const auto& x = a.value();
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = fwd(x[i]);
  return make_result(a.shape(), std::move(y), {a}, [deriv](Node& self) {
    Node& in = input(self, 0);
    if (!in.requires_grad) return;
    auto& g = in.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] += self.grad[i] * deriv(in.value[i], self.value[i]);
    }
  });
}

// Unfolds one channel group of x into a [cg*k*k, out_h*out_w] column matrix.
void im2col(const double* x, int cg, int h, int w, int k, int stride, int pad, int out_h,
            int out_w, double* cols) {
  const int plane = out_h * out_w;
  for (int c = 0; c < cg; ++c) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        double* row = cols + ((c * k + ky) * k + kx) * plane;
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * stride - pad + ky;
          double* dst = row + oy * out_w;
          if (iy < 0 || iy >= h) {
            std::fill(dst, dst + out_w, 0.0);
            continue;
          }
          const double* src = x + (c * h + iy) * w;
          for (int ox = 0; ox < out_w; ++ox) {
            const int ix = ox * stride - pad + kx;
            dst[ox] = (ix >= 0 && ix < w) ? src[ix] : 0.0;
          }
        }
      }
    }
  }
}

void col2im(const double* cols, int cg, int h, int w, int k, int stride, int pad, int out_h,
            int out_w, double* dx) {
  const int plane = out_h * out_w;
  for (int c = 0; c < cg; ++c) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const double* row = cols + ((c * k + ky) * k + kx) * plane;
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= h) continue;
          const double* src = row + oy * out_w;
          double* dst = dx + (c * h + iy) * w;
          for (int ox = 0; ox < out_w; ++ox) {
            const int ix = ox * stride - pad + kx;
            if (ix >= 0 && ix < w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

struct BilinearTap {
  int i0;
  int i1;
  double frac;
};

std::vector<BilinearTap> bilinear_taps(int in, int out) {
  std::vector<BilinearTap> taps(out);
  const double scale = static_cast<double>(in) / out;
  for (int o = 0; o < out; ++o) {
    double src = (o + 0.5) * scale - 0.5;
    if (src < 0) src = 0;
    int i0 = static_cast<int>(std::floor(src));
    if (i0 > in - 1) i0 = in - 1;
    const int i1 = std::min(i0 + 1, in - 1);
    taps[o] = {i0, i1, src - i0};
  }
  return taps;
}

}  // namespace

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ')';
  return os.str();
}

std::vector<double>& Node::grad_buffer() {
  if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  return grad;
}

Var Var::constant(Shape shape, std::vector<double> values) {
  require(numel(shape) == values.size(), ErrorCode::kInvalidArgument,
          "Var::constant: " + std::to_string(values.size()) + " values for shape " +
              shape_string(shape));
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  return Var(std::move(node));
}

Var Var::zeros(Shape shape) {
  const std::size_t n = numel(shape);
  return constant(std::move(shape), std::vector<double>(n, 0.0));
}

Var Var::scalar(double v) { return constant({1}, {v}); }

Var Var::parameter(Shape shape, std::vector<double> values) {
  Var v = constant(std::move(shape), std::move(values));
  v.node_->requires_grad = true;
  return v;
}

Var Var::from_node(std::shared_ptr<Node> node) { return Var(std::move(node)); }

const Shape& Var::shape() const { return node_->shape; }
int Var::dim(std::size_t axis) const { return node_->shape.at(axis); }
std::size_t Var::rank() const { return node_->shape.size(); }
std::size_t Var::size() const { return node_->value.size(); }
const std::vector<double>& Var::value() const { return node_->value; }
std::vector<double>& Var::mutable_value() { return node_->value; }

double Var::item() const {
  require(size() == 1, ErrorCode::kInvalidArgument,
          "item() on non-scalar " + shape_string(shape()));
  return node_->value[0];
}

bool Var::requires_grad() const { return node_ && node_->requires_grad; }
const std::vector<double>& Var::grad() const { return node_->grad; }
std::vector<double>& Var::mutable_grad() { return node_->grad_buffer(); }

void Var::zero_grad() {
  if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

void Var::backward() const {
  require(size() == 1, ErrorCode::kInvalidArgument, "backward() requires a scalar");
  if (!node_->requires_grad) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->inputs.size()) {
      Node* child = n->inputs[next++].get();
      if (child->requires_grad && !visited.count(child)) {
        visited.insert(child);
        stack.emplace_back(child, 0);
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  node_->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward && !n->grad.empty()) n->backward(*n);
  }
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

// ---------------------------------------------------------------------------
// Elementwise

Var add(const Var& a, const Var& b) {
  check_same_shape(a, b, "add");
  std::vector<double> y(a.value());
  const auto& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += bv[i];
  return make_result(a.shape(), std::move(y), {a, b}, [](Node& self) {
    for (std::size_t k = 0; k < 2; ++k) {
      Node& in = input(self, k);
      if (!in.requires_grad) continue;
      auto& g = in.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Var sub(const Var& a, const Var& b) {
  check_same_shape(a, b, "sub");
  std::vector<double> y(a.value());
  const auto& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= bv[i];
  return make_result(a.shape(), std::move(y), {a, b}, [](Node& self) {
    Node& lhs = input(self, 0);
    Node& rhs = input(self, 1);
    if (lhs.requires_grad) {
      auto& g = lhs.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (rhs.requires_grad) {
      auto& g = rhs.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  check_same_shape(a, b, "mul");
  std::vector<double> y(a.value());
  const auto& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= bv[i];
  return make_result(a.shape(), std::move(y), {a, b}, [](Node& self) {
    Node& lhs = input(self, 0);
    Node& rhs = input(self, 1);
    if (lhs.requires_grad) {
      auto& g = lhs.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * rhs.value[i];
    }
    if (rhs.requires_grad) {
      auto& g = rhs.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * lhs.value[i];
    }
  });
}

Var affine(const Var& a, double scale, double shift) {
  return unary(
      a, [scale, shift](double x) { return scale * x + shift; },
      [scale](double, double) { return scale; });
}

Var add_constant(const Var& a, const std::vector<double>& c) {
  require(c.size() == a.size(), ErrorCode::kInvalidArgument, "add_constant: size mismatch");
  std::vector<double> y(a.value());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += c[i];
  return make_result(a.shape(), std::move(y), {a}, [](Node& self) {
    Node& in = input(self, 0);
    if (!in.requires_grad) return;
    auto& g = in.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Var sigmoid(const Var& a) {
  return unary(
      a,
      [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var tanh(const Var& a) {
  return unary(
      a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var relu(const Var& a) {
  return unary(
      a, [](double x) { return x > 0 ? x : 0.0; },
      [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Var leaky_relu(const Var& a, double slope) {
  return unary(
      a, [slope](double x) { return x > 0 ? x : slope * x; },
      [slope](double x, double) { return x > 0 ? 1.0 : slope; });
}

Var log_clamped(const Var& a, double floor) {
  return unary(
      a, [floor](double x) { return std::log(std::max(x, floor)); },
      [floor](double x, double) { return x > floor ? 1.0 / x : 0.0; });
}

Var square(const Var& a) {
  return unary(
      a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

// ---------------------------------------------------------------------------
// Reductions

Var sum(const Var& a) {
  const auto& x = a.value();
  const double s = std::accumulate(x.begin(), x.end(), 0.0);
  return make_result({1}, {s}, {a}, [](Node& self) {
    Node& in = input(self, 0);
    if (!in.requires_grad) return;
    auto& g = in.grad_buffer();
    for (auto& gi : g) gi += self.grad[0];
  });
}

Var sum_all(const std::vector<Var>& terms) {
  require(!terms.empty(), ErrorCode::kInvalidArgument, "sum_all: no terms");
  const Shape& shape = terms.front().shape();
  std::vector<double> y(terms.front().size(), 0.0);
  for (const auto& t : terms) {
    require(t.shape() == shape, ErrorCode::kInvalidArgument, "sum_all: shape mismatch");
    const auto& v = t.value();
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += v[i];
  }
  return make_result(shape, std::move(y), terms, [](Node& self) {
    for (auto& in : self.inputs) {
      if (!in->requires_grad) continue;
      auto& g = in->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Var pick(const Var& a, std::size_t index) {
  require(index < a.size(), ErrorCode::kInvalidArgument, "pick: index out of range");
  return make_result({1}, {a.value()[index]}, {a}, [index](Node& self) {
    Node& in = input(self, 0);
    if (!in.requires_grad) return;
    in.grad_buffer()[index] += self.grad[0];
  });
}

Var l2_norm(const Var& a) {
  const auto& x = a.value();
  double ss = 0;
  for (double v : x) ss += v * v;
  const double n = std::sqrt(ss);
  return make_result({1}, {n}, {a}, [](Node& self) {
    Node& in = input(self, 0);
    if (!in.requires_grad || self.value[0] == 0.0) return;
    auto& g = in.grad_buffer();
    const double scale = self.grad[0] / self.value[0];
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += scale * in.value[i];
  });
}

// ---------------------------------------------------------------------------
// Shape manipulation

Var reshape(const Var& a, Shape shape) {
  require(numel(shape) == a.size(), ErrorCode::kInvalidArgument,
          "reshape: " + shape_string(a.shape()) + " -> " + shape_string(shape));
  return make_result(std::move(shape), a.value(), {a}, [](Node& self) {
    Node& in = input(self, 0);
    if (!in.requires_grad) return;
    auto& g = in.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Var concat(const std::vector<Var>& parts) {
  require(!parts.empty(), ErrorCode::kInvalidArgument, "concat: no inputs");
  Shape shape = parts.front().shape();
  require(!shape.empty(), ErrorCode::kInvalidArgument, "concat: rank-0 input");
  int lead = 0;
  for (const auto& p : parts) {
    require(p.rank() == shape.size() &&
                std::equal(shape.begin() + 1, shape.end(), p.shape().begin() + 1),
            ErrorCode::kInvalidArgument,
            "concat: trailing dims differ " + shape_string(shape) + " vs " +
                shape_string(p.shape()));
    lead += p.dim(0);
  }
  shape[0] = lead;
  std::vector<double> y;
  y.reserve(numel(shape));
  for (const auto& p : parts) y.insert(y.end(), p.value().begin(), p.value().end());
  return make_result(std::move(shape), std::move(y), parts, [](Node& self) {
    std::size_t offset = 0;
    for (auto& in : self.inputs) {
      const std::size_t n = in->value.size();
      if (in->requires_grad) {
        auto& g = in->grad_buffer();
        for (std::size_t i = 0; i < n; ++i) g[i] += self.grad[offset + i];
      }
      offset += n;
    }
  });
}

Var slice(const Var& a, int begin, int end) {
  require(a.rank() >= 1 && begin >= 0 && begin <= end && end <= a.dim(0),
          ErrorCode::kInvalidArgument,
          "slice: [" + std::to_string(begin) + "," + std::to_string(end) + ") of " +
              shape_string(a.shape()));
  Shape shape = a.shape();
  const std::size_t stride = numel(shape) / static_cast<std::size_t>(shape[0]);
  shape[0] = end - begin;
  const std::size_t offset = stride * static_cast<std::size_t>(begin);
  std::vector<double> y(a.value().begin() + offset,
                        a.value().begin() + offset + stride * (end - begin));
  return make_result(std::move(shape), std::move(y), {a}, [offset](Node& self) {
    Node& in = input(self, 0);
    if (!in.requires_grad) return;
    auto& g = in.grad_buffer();
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[offset + i] += self.grad[i];
  });
}

// ---------------------------------------------------------------------------
// Linear algebra

Var matmul(const Var& a, const Var& b) {
  check_rank(a, 2, "matmul");
  check_rank(b, 2, "matmul");
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  require(b.dim(0) == k, ErrorCode::kInvalidArgument,
          "matmul: " + shape_string(a.shape()) + " x " + shape_string(b.shape()));
  std::vector<double> y(static_cast<std::size_t>(m) * n);
  MatMap(y.data(), m, n).noalias() =
      ConstMatMap(a.value().data(), m, k) * ConstMatMap(b.value().data(), k, n);
  return make_result({m, n}, std::move(y), {a, b}, [m, k, n](Node& self) {
    Node& lhs = input(self, 0);
    Node& rhs = input(self, 1);
    ConstMatMap dy(self.grad.data(), m, n);
    if (lhs.requires_grad) {
      MatMap(lhs.grad_buffer().data(), m, k).noalias() +=
          dy * ConstMatMap(rhs.value.data(), k, n).transpose();
    }
    if (rhs.requires_grad) {
      MatMap(rhs.grad_buffer().data(), k, n).noalias() +=
          ConstMatMap(lhs.value.data(), m, k).transpose() * dy;
    }
  });
}

Var transpose(const Var& a) {
  check_rank(a, 2, "transpose");
  const int m = a.dim(0), n = a.dim(1);
  std::vector<double> y(a.size());
  MatMap(y.data(), n, m) = ConstMatMap(a.value().data(), m, n).transpose();
  return make_result({n, m}, std::move(y), {a}, [m, n](Node& self) {
    Node& in = input(self, 0);
    if (!in.requires_grad) return;
    MatMap(in.grad_buffer().data(), m, n) += ConstMatMap(self.grad.data(), n, m).transpose();
  });
}

Var linear(const Var& x, const Var& weight, const Var& bias) {
  check_rank(weight, 2, "linear");
  const int out = weight.dim(0), in = weight.dim(1);
  require(x.size() == static_cast<std::size_t>(in), ErrorCode::kInvalidArgument,
          "linear: input " + shape_string(x.shape()) + " vs weight " +
              shape_string(weight.shape()));
  std::vector<double> y(out);
  VecMap yv(y.data(), out);
  yv.noalias() = ConstMatMap(weight.value().data(), out, in) * ConstVecMap(x.value().data(), in);
  std::vector<Var> inputs{x, weight};
  if (bias.defined()) {
    require(bias.size() == static_cast<std::size_t>(out), ErrorCode::kInvalidArgument,
            "linear: bias size");
    yv += ConstVecMap(bias.value().data(), out);
    inputs.push_back(bias);
  }
  return make_result({out}, std::move(y), inputs, [out, in](Node& self) {
    Node& xs = input(self, 0);
    Node& w = input(self, 1);
    ConstVecMap dy(self.grad.data(), out);
    if (xs.requires_grad) {
      VecMap(xs.grad_buffer().data(), in).noalias() +=
          ConstMatMap(w.value.data(), out, in).transpose() * dy;
    }
    if (w.requires_grad) {
      MatMap(w.grad_buffer().data(), out, in).noalias() +=
          dy * ConstVecMap(xs.value.data(), in).transpose();
    }
    if (self.inputs.size() > 2) {
      Node& b = input(self, 2);
      if (b.requires_grad) VecMap(b.grad_buffer().data(), out) += dy;
    }
  });
}

Var gather_rows(const Var& table, const std::vector<int>& ids) {
  check_rank(table, 2, "gather_rows");
  const int rows = table.dim(0), cols = table.dim(1);
  std::vector<double> y;
  y.reserve(ids.size() * cols);
  for (int id : ids) {
    require(id >= 0 && id < rows, ErrorCode::kInvalidArgument,
            "gather_rows: id " + std::to_string(id) + " outside table of " +
                std::to_string(rows) + " rows");
    const auto* row = table.value().data() + static_cast<std::size_t>(id) * cols;
    y.insert(y.end(), row, row + cols);
  }
  return make_result({static_cast<int>(ids.size()), cols}, std::move(y), {table},
                     [ids, cols](Node& self) {
                       Node& t = input(self, 0);
                       if (!t.requires_grad) return;
                       auto& g = t.grad_buffer();
                       for (std::size_t r = 0; r < ids.size(); ++r) {
                         double* dst = g.data() + static_cast<std::size_t>(ids[r]) * cols;
                         const double* src = self.grad.data() + r * cols;
                         for (int c = 0; c < cols; ++c) dst[c] += src[c];
                       }
                     });
}

// ---------------------------------------------------------------------------
// Feature maps

Var conv2d(const Var& x, const Var& weight, const Var& bias, Conv2dOptions opt) {
  check_rank(x, 3, "conv2d");
  check_rank(weight, 4, "conv2d weight");
  const int c_in = x.dim(0), h = x.dim(1), w = x.dim(2);
  const int c_out = weight.dim(0), cg = weight.dim(1), k = weight.dim(2);
  const int groups = opt.groups;
  require(weight.dim(3) == k, ErrorCode::kInvalidArgument, "conv2d: non-square kernel");
  require(groups >= 1 && c_in == cg * groups && c_out % groups == 0,
          ErrorCode::kInvalidArgument,
          "conv2d: input " + shape_string(x.shape()) + " incompatible with weight " +
              shape_string(weight.shape()) + " groups=" + std::to_string(groups));
  const int out_h = (h + 2 * opt.padding - k) / opt.stride + 1;
  const int out_w = (w + 2 * opt.padding - k) / opt.stride + 1;
  require(out_h > 0 && out_w > 0, ErrorCode::kInvalidArgument, "conv2d: empty output");
  const int og = c_out / groups;
  const int plane = out_h * out_w;
  const int kk = cg * k * k;

  std::vector<double> y(static_cast<std::size_t>(c_out) * plane);
  std::vector<double> cols(static_cast<std::size_t>(kk) * plane);
  for (int g = 0; g < groups; ++g) {
    im2col(x.value().data() + static_cast<std::size_t>(g) * cg * h * w, cg, h, w, k, opt.stride,
           opt.padding, out_h, out_w, cols.data());
    MatMap(y.data() + static_cast<std::size_t>(g) * og * plane, og, plane).noalias() =
        ConstMatMap(weight.value().data() + static_cast<std::size_t>(g) * og * kk, og, kk) *
        ConstMatMap(cols.data(), kk, plane);
  }
  std::vector<Var> inputs{x, weight};
  if (bias.defined()) {
    require(bias.size() == static_cast<std::size_t>(c_out), ErrorCode::kInvalidArgument,
            "conv2d: bias size");
    for (int o = 0; o < c_out; ++o) {
      double* row = y.data() + static_cast<std::size_t>(o) * plane;
      const double b = bias.value()[o];
      for (int p = 0; p < plane; ++p) row[p] += b;
    }
    inputs.push_back(bias);
  }

  return make_result(
      {c_out, out_h, out_w}, std::move(y), inputs,
      [=](Node& self) {
        Node& xs = input(self, 0);
        Node& wt = input(self, 1);
        std::vector<double> col(static_cast<std::size_t>(kk) * plane);
        std::vector<double> dcol;
        if (xs.requires_grad) dcol.resize(col.size());
        for (int g = 0; g < groups; ++g) {
          ConstMatMap dy(self.grad.data() + static_cast<std::size_t>(g) * og * plane, og, plane);
          if (wt.requires_grad) {
            im2col(xs.value.data() + static_cast<std::size_t>(g) * cg * h * w, cg, h, w, k,
                   opt.stride, opt.padding, out_h, out_w, col.data());
            MatMap(wt.grad_buffer().data() + static_cast<std::size_t>(g) * og * kk, og, kk)
                .noalias() += dy * ConstMatMap(col.data(), kk, plane).transpose();
          }
          if (xs.requires_grad) {
            MatMap(dcol.data(), kk, plane).noalias() =
                ConstMatMap(wt.value.data() + static_cast<std::size_t>(g) * og * kk, og, kk)
                    .transpose() *
                dy;
            col2im(dcol.data(), cg, h, w, k, opt.stride, opt.padding, out_h, out_w,
                   xs.grad_buffer().data() + static_cast<std::size_t>(g) * cg * h * w);
          }
        }
        if (self.inputs.size() > 2) {
          Node& b = input(self, 2);
          if (b.requires_grad) {
            auto& gb = b.grad_buffer();
            for (int o = 0; o < c_out; ++o) {
              const double* row = self.grad.data() + static_cast<std::size_t>(o) * plane;
              double s = 0;
              for (int p = 0; p < plane; ++p) s += row[p];
              gb[o] += s;
            }
          }
        }
      });
}

Var upsample_bilinear(const Var& x, int out_h, int out_w) {
  check_rank(x, 3, "upsample_bilinear");
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const auto ty = bilinear_taps(h, out_h);
  const auto tx = bilinear_taps(w, out_w);
  std::vector<double> y(static_cast<std::size_t>(c) * out_h * out_w);
  const auto& xv = x.value();
  for (int ch = 0; ch < c; ++ch) {
    const double* src = xv.data() + static_cast<std::size_t>(ch) * h * w;
    double* dst = y.data() + static_cast<std::size_t>(ch) * out_h * out_w;
    for (int oy = 0; oy < out_h; ++oy) {
      const auto& a = ty[oy];
      for (int ox = 0; ox < out_w; ++ox) {
        const auto& b = tx[ox];
        const double top = src[a.i0 * w + b.i0] * (1 - b.frac) + src[a.i0 * w + b.i1] * b.frac;
        const double bot = src[a.i1 * w + b.i0] * (1 - b.frac) + src[a.i1 * w + b.i1] * b.frac;
        dst[oy * out_w + ox] = top * (1 - a.frac) + bot * a.frac;
      }
    }
  }
  return make_result({c, out_h, out_w}, std::move(y), {x}, [=](Node& self) {
    Node& in = input(self, 0);
    if (!in.requires_grad) return;
    auto& g = in.grad_buffer();
    for (int ch = 0; ch < c; ++ch) {
      double* dst = g.data() + static_cast<std::size_t>(ch) * h * w;
      const double* dy = self.grad.data() + static_cast<std::size_t>(ch) * out_h * out_w;
      for (int oy = 0; oy < out_h; ++oy) {
        const auto& a = ty[oy];
        for (int ox = 0; ox < out_w; ++ox) {
          const auto& b = tx[ox];
          const double d = dy[oy * out_w + ox];
          dst[a.i0 * w + b.i0] += d * (1 - a.frac) * (1 - b.frac);
          dst[a.i0 * w + b.i1] += d * (1 - a.frac) * b.frac;
          dst[a.i1 * w + b.i0] += d * a.frac * (1 - b.frac);
          dst[a.i1 * w + b.i1] += d * a.frac * b.frac;
        }
      }
    }
  });
}

Var global_avg_pool(const Var& x) {
  check_rank(x, 3, "global_avg_pool");
  const int c = x.dim(0);
  const int plane = x.dim(1) * x.dim(2);
  std::vector<double> y(c);
  for (int ch = 0; ch < c; ++ch) {
    const double* src = x.value().data() + static_cast<std::size_t>(ch) * plane;
    y[ch] = std::accumulate(src, src + plane, 0.0) / plane;
  }
  return make_result({c}, std::move(y), {x}, [c, plane](Node& self) {
    Node& in = input(self, 0);
    if (!in.requires_grad) return;
    auto& g = in.grad_buffer();
    for (int ch = 0; ch < c; ++ch) {
      const double d = self.grad[ch] / plane;
      double* dst = g.data() + static_cast<std::size_t>(ch) * plane;
      for (int p = 0; p < plane; ++p) dst[p] += d;
    }
  });
}

Var broadcast_spatial(const Var& v, int h, int w) {
  const int c = static_cast<int>(v.size());
  const int plane = h * w;
  std::vector<double> y(static_cast<std::size_t>(c) * plane);
  for (int ch = 0; ch < c; ++ch) {
    std::fill(y.begin() + static_cast<std::ptrdiff_t>(ch) * plane,
              y.begin() + static_cast<std::ptrdiff_t>(ch + 1) * plane, v.value()[ch]);
  }
  return make_result({c, h, w}, std::move(y), {v}, [c, plane](Node& self) {
    Node& in = input(self, 0);
    if (!in.requires_grad) return;
    auto& g = in.grad_buffer();
    for (int ch = 0; ch < c; ++ch) {
      const double* src = self.grad.data() + static_cast<std::size_t>(ch) * plane;
      g[ch] += std::accumulate(src, src + plane, 0.0);
    }
  });
}

Var cell_vector(const Var& x, int row, int col) {
  check_rank(x, 3, "cell_vector");
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  require(row >= 0 && row < h && col >= 0 && col < w, ErrorCode::kInvalidArgument,
          "cell_vector: cell out of bounds");
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const std::size_t offset = static_cast<std::size_t>(row) * w + col;
  std::vector<double> y(c);
  for (int ch = 0; ch < c; ++ch) y[ch] = x.value()[ch * plane + offset];
  return make_result({c}, std::move(y), {x}, [c, plane, offset](Node& self) {
    Node& in = input(self, 0);
    if (!in.requires_grad) return;
    auto& g = in.grad_buffer();
    for (int ch = 0; ch < c; ++ch) g[ch * plane + offset] += self.grad[ch];
  });
}

Var scale_by_map(const Var& weights, const Var& x) {
  check_rank(x, 3, "scale_by_map");
  const int c = x.dim(0);
  const std::size_t plane = static_cast<std::size_t>(x.dim(1)) * x.dim(2);
  require(weights.size() == plane, ErrorCode::kInvalidArgument,
          "scale_by_map: weight map " + shape_string(weights.shape()) + " vs " +
              shape_string(x.shape()));
  std::vector<double> y(x.value());
  const auto& a = weights.value();
  for (int ch = 0; ch < c; ++ch) {
    for (std::size_t p = 0; p < plane; ++p) y[ch * plane + p] *= a[p];
  }
  return make_result(x.shape(), std::move(y), {weights, x}, [c, plane](Node& self) {
    Node& wn = input(self, 0);
    Node& xn = input(self, 1);
    if (wn.requires_grad) {
      auto& g = wn.grad_buffer();
      for (int ch = 0; ch < c; ++ch) {
        for (std::size_t p = 0; p < plane; ++p) {
          g[p] += self.grad[ch * plane + p] * xn.value[ch * plane + p];
        }
      }
    }
    if (xn.requires_grad) {
      auto& g = xn.grad_buffer();
      for (int ch = 0; ch < c; ++ch) {
        for (std::size_t p = 0; p < plane; ++p) {
          g[ch * plane + p] += self.grad[ch * plane + p] * wn.value[p];
        }
      }
    }
  });
}

// ---------------------------------------------------------------------------
// Normalizers

Var softmax(const Var& a) {
  const auto& x = a.value();
  const double m = *std::max_element(x.begin(), x.end());
  std::vector<double> y(x.size());
  double z = 0;
  for (std::size_t i = 0; i < x.size(); ++i) z += (y[i] = std::exp(x[i] - m));
  for (auto& v : y) v /= z;
  return make_result(a.shape(), std::move(y), {a}, [](Node& self) {
    Node& in = input(self, 0);
    if (!in.requires_grad) return;
    double dot = 0;
    for (std::size_t i = 0; i < self.value.size(); ++i) dot += self.grad[i] * self.value[i];
    auto& g = in.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.value[i] * (self.grad[i] - dot);
  });
}

Var log_softmax(const Var& a) {
  const auto& x = a.value();
  const double m = *std::max_element(x.begin(), x.end());
  double z = 0;
  for (double v : x) z += std::exp(v - m);
  const double lse = m + std::log(z);
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] - lse;
  return make_result(a.shape(), std::move(y), {a}, [](Node& self) {
    Node& in = input(self, 0);
    if (!in.requires_grad) return;
    const double gsum = std::accumulate(self.grad.begin(), self.grad.end(), 0.0);
    auto& g = in.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] += self.grad[i] - std::exp(self.value[i]) * gsum;
    }
  });
}

namespace {

// Shared driver for per-cell normalizers over the channel axis of [K, H, W].
template <typename Fwd, typename Bwd>
Var per_cell(const Var& x, const char* op, Fwd fwd, Bwd bwd) {
  check_rank(x, 3, op);
  const int k = x.dim(0);
  const std::size_t plane = static_cast<std::size_t>(x.dim(1)) * x.dim(2);
  std::vector<double> y(x.size());
  std::vector<double> in(k), out(k);
  for (std::size_t p = 0; p < plane; ++p) {
    for (int c = 0; c < k; ++c) in[c] = x.value()[c * plane + p];
    fwd(in, out);
    for (int c = 0; c < k; ++c) y[c * plane + p] = out[c];
  }
  return make_result(x.shape(), std::move(y), {x}, [k, plane, bwd](Node& self) {
    Node& src = input(self, 0);
    if (!src.requires_grad) return;
    auto& g = src.grad_buffer();
    std::vector<double> xin(k), yout(k), dy(k), dx(k);
    for (std::size_t p = 0; p < plane; ++p) {
      for (int c = 0; c < k; ++c) {
        xin[c] = src.value[c * plane + p];
        yout[c] = self.value[c * plane + p];
        dy[c] = self.grad[c * plane + p];
      }
      bwd(xin, yout, dy, dx);
      for (int c = 0; c < k; ++c) g[c * plane + p] += dx[c];
    }
  });
}

}  // namespace

Var channel_softmax(const Var& x) {
  return per_cell(
      x, "channel_softmax",
      [](const std::vector<double>& in, std::vector<double>& out) {
        const double m = *std::max_element(in.begin(), in.end());
        double z = 0;
        for (std::size_t i = 0; i < in.size(); ++i) z += (out[i] = std::exp(in[i] - m));
        for (auto& v : out) v /= z;
      },
      [](const std::vector<double>&, const std::vector<double>& y, const std::vector<double>& dy,
         std::vector<double>& dx) {
        double dot = 0;
        for (std::size_t i = 0; i < y.size(); ++i) dot += dy[i] * y[i];
        for (std::size_t i = 0; i < y.size(); ++i) dx[i] = y[i] * (dy[i] - dot);
      });
}

Var channel_log_softmax(const Var& x) {
  return per_cell(
      x, "channel_log_softmax",
      [](const std::vector<double>& in, std::vector<double>& out) {
        const double m = *std::max_element(in.begin(), in.end());
        double z = 0;
        for (double v : in) z += std::exp(v - m);
        const double lse = m + std::log(z);
        for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] - lse;
      },
      [](const std::vector<double>&, const std::vector<double>& y, const std::vector<double>& dy,
         std::vector<double>& dx) {
        const double gsum = std::accumulate(dy.begin(), dy.end(), 0.0);
        for (std::size_t i = 0; i < y.size(); ++i) dx[i] = dy[i] - std::exp(y[i]) * gsum;
      });
}

namespace {
constexpr double kNormEps = 1e-12;

void l2_forward(const std::vector<double>& in, std::vector<double>& out) {
  double ss = 0;
  for (double v : in) ss += v * v;
  const double n = std::max(std::sqrt(ss), kNormEps);
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] / n;
}

void l2_backward(const std::vector<double>& x, const std::vector<double>& y,
                 const std::vector<double>& dy, std::vector<double>& dx) {
  double ss = 0;
  for (double v : x) ss += v * v;
  const double n = std::sqrt(ss);
  if (n < kNormEps) {
    for (std::size_t i = 0; i < x.size(); ++i) dx[i] = dy[i] / kNormEps;
    return;
  }
  double dot = 0;
  for (std::size_t i = 0; i < y.size(); ++i) dot += dy[i] * y[i];
  for (std::size_t i = 0; i < y.size(); ++i) dx[i] = (dy[i] - y[i] * dot) / n;
}
}  // namespace

Var l2_normalize(const Var& a) {
  std::vector<double> y(a.size());
  l2_forward(a.value(), y);
  return make_result(a.shape(), std::move(y), {a}, [](Node& self) {
    Node& in = input(self, 0);
    if (!in.requires_grad) return;
    std::vector<double> dx(in.value.size());
    l2_backward(in.value, self.value, self.grad, dx);
    auto& g = in.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += dx[i];
  });
}

Var channel_l2_normalize(const Var& x) {
  return per_cell(x, "channel_l2_normalize", l2_forward, l2_backward);
}

}  // namespace text2scene::nn
