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

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "tovreg/diff/ops.hpp"
#include "tovreg/diff/param_store.hpp"
#include "tovreg/rng.hpp"

namespace tovreg::ssl {

using diff::ParamStore;
using diff::Var;

// The six orderings of (prev, current, next), lexicographic. Index 0 is the
// true temporal order.
inline constexpr std::array<std::array<int, 3>, 6> kPermutations = {{
    {0, 1, 2},
    {0, 2, 1},
    {1, 0, 2},
    {1, 2, 0},
    {2, 0, 1},
    {2, 1, 0},
}};
inline constexpr int kReversed = 5;

inline int order_label(int permutation) { return permutation == 0 ? 0 : 1; }

template <typename T>
struct TemporalBatch {
  Var<T> features;                // N x 3D, slot blocks in permuted order
  std::vector<int> permutations;  // per row, index into kPermutations
  std::vector<int> labels;        // 0 = true order, 1 = shuffled
};

// Draws one permutation per row, uniform over the six.
template <typename T>
TemporalBatch<T> build_temporal_batch(const Var<T>& prev, const Var<T>& current, const Var<T>& next, Rng& rng);

template <typename T>
TemporalBatch<T> build_temporal_batch(const Var<T>& prev, const Var<T>& current, const Var<T>& next,
                                      std::span<const int> permutations);

inline constexpr const char* kTemporalPrefix = "temporal_head.";

// Single-logit linear layer over the 3D concatenation. The bias starts at
// ln 5, the log-odds of a shuffled triple, so the initial loss sits at the
// label-prior entropy instead of being pulled there through the encoder.
template <typename T>
void add_temporal_head_params(ParamStore<T>& params, int embed_dim, std::uint64_t seed);

// N x 3D -> N x 1 logits.
template <typename T>
Var<T> temporal_logits(const ParamStore<T>& params, const Var<T>& features);

}  // namespace tovreg::ssl
