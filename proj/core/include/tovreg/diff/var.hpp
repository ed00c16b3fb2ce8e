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

#pragma once

#include <functional>
#include <memory>
#include <string_view>
#include <utility>
#include <vector>

#include "tovreg/diff/tensor.hpp"

namespace tovreg::diff {

template <typename T>
struct Node;

// Reverse-mode rule: reads `self.grad` and accumulates into the gradients of
// `self.parents` (via Node::grad_slot).
template <typename T>
using BackwardFn = std::function<void(Node<T>& self)>;

template <typename T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;
  bool has_grad = false;
  bool requires_grad = false;
  bool is_leaf = true;
  std::string_view op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  BackwardFn<T> backward;

  // Gradient buffer, zero-initialized on first use.
  Tensor<T>& grad_slot() {
    if (!has_grad) {
      grad = Tensor<T>(value.shape(), T{0});
      has_grad = true;
    }
    return grad;
  }
};

// Handle to a graph node. Copies share the node.
template <typename T>
class Var {
 public:
  Var() = default;

  static Var constant(Tensor<T> value);
  static Var leaf(Tensor<T> value, bool requires_grad);

  // Builds an interior node. `backward` is only kept when some parent needs a
  // gradient; otherwise the result is a constant.
  static Var make(Tensor<T> value, std::string_view op, std::vector<Var> parents,
                  BackwardFn<T> backward);

  const Tensor<T>& value() const { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  std::size_t size() const { return node_->value.size(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool is_leaf() const { return node_->is_leaf; }
  bool defined() const noexcept { return static_cast<bool>(node_); }

  // Gradient accumulated by backward(); zeros if none has reached this node.
  Tensor<T> grad() const;
  void zero_grad();

  // In-place update of a leaf value (optimizer steps, checkpoint loads).
  Tensor<T>& mutable_value();

  Node<T>& node() const { return *node_; }
  const std::shared_ptr<Node<T>>& node_ptr() const { return node_; }

 private:
  explicit Var(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  std::shared_ptr<Node<T>> node_;
};

// Propagates d(loss)/d(node) to every requires_grad ancestor. Leaf gradients
// accumulate across calls until zero_grad(); interior gradients are reset on
// each call. Throws ContractError unless loss holds exactly one element.
template <typename T>
void backward(const Var<T>& loss);

extern template class Var<float>;
extern template class Var<double>;
extern template void backward<float>(const Var<float>&);
extern template void backward<double>(const Var<double>&);

}  // namespace tovreg::diff
