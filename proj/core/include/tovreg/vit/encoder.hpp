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
#include "tovreg/vit/config.hpp"

namespace tovreg::vit {

using diff::ParamStore;
using diff::Tensor;
using diff::Var;

// C x H x W image -> (grid*grid) x (C*p*p) rows, patches in row-major grid
// order, each row flattened as (channel, row, col). Pixels beyond the last
// full patch on each axis are dropped. Throws ConfigError when H/p or W/p is 0.
template <typename T>
Tensor<T> patchify(const Tensor<T>& image, int patch_size);

// N x C x H x W -> N x (grid*grid) x (C*p*p).
template <typename T>
Tensor<T> patchify_batch(const Tensor<T>& images, int patch_size);

template <typename T>
struct EncoderOutput {
  Var<T> representation;                 // N x embed_dim, final-LN CLS row
  std::vector<Tensor<T>> mlp_activations;  // per block: N x tokens x mlp_hidden, post-GELU
  Tensor<T> attention;                   // last block: N x heads x tokens x tokens
  bool captured = false;
};

// Pre-norm ViT over a batch (N x C x H x W, or a single C x H x W image).
// Parameters are looked up under kPrefix; throws ContractError naming the
// first missing or misshapen parameter.
template <typename T>
EncoderOutput<T> forward(const ParamStore<T>& params, const Tensor<T>& images, const ViTConfig& config,
                         bool capture = false);

// Adds encoder parameters to `params`: truncated-normal(0.02) weights, zero
// biases, unit LayerNorm gains, zero CLS and positional table.
template <typename T>
void add_encoder_params(ParamStore<T>& params, const ViTConfig& config, std::uint64_t seed);

template <typename T>
ParamStore<T> init_params(const ViTConfig& config, std::uint64_t seed);

// Throws ContractError naming the first parameter that is missing or has the
// wrong shape for `config`.
template <typename T>
void check_params(const ParamStore<T>& params, const ViTConfig& config);

// Per head, the CLS row of the last-block attention restricted to patch
// tokens, renormalized to sum to 1 and shaped grid x grid.
template <typename T>
std::vector<Tensor<T>> attention_maps(const EncoderOutput<T>& output, const ViTConfig& config,
                                      std::size_t sample = 0);

// Bilinear resampling matrix (align_corners = false) taking a flattened
// from x from grid to a flattened to x to grid: shape [to*to, from*from].
template <typename T>
Tensor<T> grid_resample_matrix(int from, int to);

}  // namespace tovreg::vit
