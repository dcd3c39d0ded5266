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

#include "dcls/autograd.hpp"

#include <algorithm>
#include <unordered_set>

#include "dcls/common.hpp"

namespace dcls::nn {

namespace {
thread_local bool g_grad_enabled = true;
}

Tensor::Tensor(Shape s, std::vector<double> values) : shape(s), data(std::move(values)) {
  require(data.size() == numel(s), "tensor data size ", data.size(), " does not match shape");
}

Tensor& Node::ensure_grad() {
  if (grad.size() != value.size()) grad = Tensor(value.shape);
  return grad;
}

void Var::zero_grad() {
  if (node_) node_->grad = Tensor();
}

Var constant(Tensor t) {
  auto node = std::make_shared<Node>();
  node->value = std::move(t);
  return Var(node);
}

Var param(Tensor t) {
  auto node = std::make_shared<Node>();
  node->value = std::move(t);
  node->requires_grad = true;
  return Var(node);
}

Var make_result(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  if (!g_grad_enabled) return Var(node);
  const bool needs = std::ranges::any_of(parents, [](const Var& p) { return p.requires_grad(); });
  if (!needs) return Var(node);
  node->requires_grad = true;
  for (auto& p : parents) node->parents.push_back(p.shared());
  node->backward = std::move(backward);
  return Var(node);
}

void backward(const Var& loss) {
  require(loss.value().size() == 1, "backward needs a scalar loss, got ", loss.value().size(),
          " elements");
  if (!loss.requires_grad()) return;
  // Iterative post-order DFS; deep nets would overflow a recursive one.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{loss.node(), 0}};
  seen.insert(loss.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  loss.node()->ensure_grad().data[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward && n->grad.size() == n->value.size()) n->backward(*n);
  }
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

}  // namespace dcls::nn
