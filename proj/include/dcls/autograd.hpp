// Copyright 2026 The dclssr Authors.
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

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

/// Minimal reverse-mode autodiff over dense NCHW double tensors.
///
/// A Var is a handle to a graph node. Ops record their parents and a backward
/// closure when any input requires a gradient; calling backward(loss) walks
/// the graph once in reverse topological order. Leaves created by param()
/// keep their accumulated grad until zero_grad().
namespace dcls::nn {

using Shape = std::array<int, 4>;

inline std::size_t numel(const Shape& s) {
  return static_cast<std::size_t>(s[0]) * s[1] * s[2] * s[3];
}

struct Tensor {
  Shape shape{0, 0, 0, 0};
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(Shape s, double fill = 0.0) : shape(s), data(numel(s), fill) {}
  Tensor(Shape s, std::vector<double> values);

  int n() const { return shape[0]; }
  int c() const { return shape[1]; }
  int h() const { return shape[2]; }
  int w() const { return shape[3]; }
  std::size_t size() const { return data.size(); }
  std::size_t sample_size() const { return numel({1, shape[1], shape[2], shape[3]}); }
  double& at(int n, int c, int y, int x) { return data[index(n, c, y, x)]; }
  double at(int n, int c, int y, int x) const { return data[index(n, c, y, x)]; }
  std::size_t index(int n, int c, int y, int x) const {
    return ((static_cast<std::size_t>(n) * shape[1] + c) * shape[2] + y) * shape[3] + x;
  }
};

struct Node {
  Tensor value;
  Tensor grad;  // allocated on first use
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  Tensor& ensure_grad();
};

class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  const Tensor& value() const { return node_->value; }
  Tensor& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape; }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  /// Accumulated gradient; empty tensor if none reached this node.
  const Tensor& grad() const { return node_->grad; }
  void zero_grad();
  Node* node() const { return node_.get(); }
  const std::shared_ptr<Node>& shared() const { return node_; }
  explicit operator bool() const { return static_cast<bool>(node_); }

 private:
  std::shared_ptr<Node> node_;
};

Var constant(Tensor t);
Var param(Tensor t);

/// Builds the output node of an op. If no parent requires a gradient (or a
/// NoGradGuard is active) the graph edge is dropped and `backward` ignored.
Var make_result(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward);

/// Seeds d(loss)/d(loss) = 1; loss must hold a single element.
void backward(const Var& loss);

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

}  // namespace dcls::nn
