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

#include <cstddef>
#include <span>
#include <vector>

#include "tovreg/diff/var.hpp"

// Differentiable primitives. Every op validates shapes up front and throws
// ShapeError naming itself and the offending shapes.
//
// Binary elementwise ops broadcast numpy-style (shapes aligned on the right,
// extent-1 axes stretch).
namespace tovreg::diff {

template <typename T> Var<T> add(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> sub(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> mul(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> div(const Var<T>& a, const Var<T>& b);

template <typename T> Var<T> add_scalar(const Var<T>& a, T c);
template <typename T> Var<T> scale(const Var<T>& a, T c);
template <typename T> Var<T> square(const Var<T>& a);

// a: [..., M, K]; b: [K, N] (shared across leading axes) or [..., K, N] with
// the same leading axes as a.
template <typename T> Var<T> matmul(const Var<T>& a, const Var<T>& b);

// Swaps the last two axes.
template <typename T> Var<T> transpose(const Var<T>& a);
template <typename T> Var<T> permute(const Var<T>& a, const std::vector<std::size_t>& axes);
template <typename T> Var<T> reshape(const Var<T>& a, Shape shape);

template <typename T>
Var<T> slice(const Var<T>& a, std::size_t axis, std::size_t start, std::size_t length);
template <typename T> Var<T> concat(const std::vector<Var<T>>& parts, std::size_t axis);

// Full reductions return rank-0 scalars.
template <typename T> Var<T> sum(const Var<T>& a);
template <typename T> Var<T> mean(const Var<T>& a);
template <typename T> Var<T> sum(const Var<T>& a, std::size_t axis, bool keepdim = false);
template <typename T> Var<T> mean(const Var<T>& a, std::size_t axis, bool keepdim = false);
// Variance along `axis`; unbiased (N-1 denominator) unless told otherwise.
template <typename T>
Var<T> variance(const Var<T>& a, std::size_t axis, bool unbiased = true, bool keepdim = false);

// Throws DomainError on negative input.
template <typename T> Var<T> sqrt(const Var<T>& a);
// Throws DomainError on non-positive input.
template <typename T> Var<T> log(const Var<T>& a);
template <typename T> Var<T> relu(const Var<T>& a);
// Exact form x * Phi(x).
template <typename T> Var<T> gelu(const Var<T>& a);
template <typename T> Var<T> sigmoid(const Var<T>& a);
template <typename T> Var<T> softmax(const Var<T>& a);

// Normalizes over the last axis with biased variance, then applies
// gain/bias of shape [last extent].
template <typename T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gain, const Var<T>& bias, T eps = T(1e-6));

}  // namespace tovreg::diff
