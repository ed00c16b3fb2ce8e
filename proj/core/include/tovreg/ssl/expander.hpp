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

#include <cstdint>
#include <vector>

#include "tovreg/diff/ops.hpp"
#include "tovreg/diff/param_store.hpp"

namespace tovreg::ssl {

using diff::ParamStore;

inline constexpr const char* kExpanderPrefix = "expander.";
inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

// MLP that widens representations before the VICReg terms:
//   for every width but the last: Linear -> BatchNorm -> ReLU
//   last width: Linear without bias.
// Linear layers use the U(-1/sqrt(in), 1/sqrt(in)) init; batch-norm gains 1,
// biases 0, running mean 0, running variance 1.
template <typename T>
void add_expander_params(ParamStore<T>& params, int in_dim, const std::vector<int>& widths, std::uint64_t seed);

// Training mode normalizes with batch statistics (biased variance) and
// updates the running statistics with momentum 0.1 (unbiased variance);
// eval mode normalizes with the running statistics. Training mode with
// N < 2 throws ContractError.
template <typename T>
diff::Var<T> expander_forward(ParamStore<T>& params, const diff::Var<T>& y, bool training);

// Number of Linear layers found in `params`.
template <typename T>
int expander_depth(const ParamStore<T>& params);

}  // namespace tovreg::ssl
