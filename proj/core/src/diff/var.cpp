// Copyright 2026 The tovreg Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tovreg/diff/var.hpp"

#include <unordered_set>

#include "tovreg/errors.hpp"

namespace tovreg::diff {

template <typename T>
Var<T> Var<T>::constant(Tensor<T> value) {
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  return Var(std::move(node));
}

template <typename T>
Var<T> Var<T>::leaf(Tensor<T> value, bool requires_grad) {
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  node->requires_grad = requires_grad;
  return Var(std::move(node));
}

template <typename T>
Var<T> Var<T>::make(Tensor<T> value, std::string_view op, std::vector<Var> parents,
                    BackwardFn<T> backward) {
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  node->op = op;
  node->is_leaf = false;
  bool any = false;
  for (const Var& p : parents) any = any || p.requires_grad();
  if (any) {
    node->requires_grad = true;
    node->parents.reserve(parents.size());
    for (Var& p : parents) node->parents.push_back(std::move(p.node_));
    node->backward = std::move(backward);
  }
  return Var(std::move(node));
}

template <typename T>
Tensor<T> Var<T>::grad() const {
  if (node_->has_grad) return node_->grad;
  return Tensor<T>(node_->value.shape(), T{0});
}

template <typename T>
void Var<T>::zero_grad() {
  node_->has_grad = false;
  node_->grad = Tensor<T>();
}

template <typename T>
Tensor<T>& Var<T>::mutable_value() {
  if (!node_->is_leaf) throw ContractError("mutable_value: only leaf values may be updated in place");
  return node_->value;
}

template <typename T>
void backward(const Var<T>& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw ContractError("backward: loss must be a scalar, got shape " +
                        (loss.defined() ? shape_str(loss.shape()) : std::string("<undefined>")));
  }
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS gives a topological order (parents first).
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> visited;
  std::vector<std::pair<Node<T>*, std::size_t>> stack;
  stack.emplace_back(&loss.node(), 0);
  visited.insert(&loss.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<T>* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node<T>* n : order) {
    if (!n->is_leaf) {
      n->has_grad = false;
      n->grad = Tensor<T>();
    }
  }
  if (loss.is_leaf()) {
    loss.node().grad_slot()[0] += T{1};
    return;
  }
  loss.node().grad_slot().fill(T{1});
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* n = *it;
    if (n->is_leaf || !n->has_grad || !n->backward) continue;
    n->backward(*n);
  }
  // Interior buffers are dead after the sweep.
  for (Node<T>* n : order) {
    if (!n->is_leaf && n != &loss.node()) {
      n->has_grad = false;
      n->grad = Tensor<T>();
    }
  }
}

template class Var<float>;
template class Var<double>;
template void backward<float>(const Var<float>&);
template void backward<double>(const Var<double>&);

}  // namespace tovreg::diff
