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

#include <span>

#include "tovreg/diff/ops.hpp"

// VICReg terms over embedding batches Z (N x d) and the temporal-order BCE.
namespace tovreg::ssl {

using diff::Var;

// (1/N) * sum_j ||z_j - z'_j||^2. Not normalized by d.
template <typename T>
Var<T> invariance_loss(const Var<T>& z, const Var<T>& z_prime);

// (1/d) * sum_j max(0, gamma - sqrt(max(Var(Z^j), 0) + 1e-4)), unbiased Var
// over the batch. Requires N >= 2.
template <typename T>
Var<T> variance_loss(const Var<T>& z, T gamma = T{1});

// (1/d) * sum_{i != j} C_ij^2 with C the unbiased covariance of the columns.
// Requires N >= 2.
template <typename T>
Var<T> covariance_loss(const Var<T>& z);

// Mean binary cross-entropy of sigmoid(logits) against labels in {0, 1},
// with 1e-12 added inside both logarithms. logits: N or N x 1.
template <typename T>
Var<T> temporal_loss(const Var<T>& logits, std::span<const int> labels);

inline constexpr double kVarianceEps = 1e-4;
inline constexpr double kLogEps = 1e-12;

}  // namespace tovreg::ssl
