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
#include <cstdint>
#include <string>
#include <vector>

#include "tovreg/diff/param_store.hpp"

namespace tovreg::vit {

// ViT-tiny defaults. `pos_table_tokens == 0` sizes the positional table to the
// active patch grid plus CLS; any other value must be k*k + 1, and the patch
// part of the table is then bilinearly resampled to the active grid.
struct ViTConfig {
  int image_size = 84;
  int patch_size = 8;
  int in_channels = 3;
  int embed_dim = 192;
  int depth = 12;
  int heads = 3;
  int mlp_ratio = 4;
  int pos_table_tokens = 0;

  int grid() const { return patch_size > 0 ? image_size / patch_size : 0; }
  int num_patches() const { return grid() * grid(); }
  int tokens() const { return num_patches() + 1; }
  int pos_tokens() const { return pos_table_tokens == 0 ? tokens() : pos_table_tokens; }
  int pos_grid() const;
  int head_dim() const { return embed_dim / heads; }
  int mlp_hidden() const { return embed_dim * mlp_ratio; }
  int patch_dim() const { return in_channels * patch_size * patch_size; }

  // Throws ConfigError naming the first invalid field.
  void validate() const;

  friend bool operator==(const ViTConfig&, const ViTConfig&) = default;
};

// Prefix of every encoder parameter name.
inline constexpr const char* kPrefix = "encoder.";

// Exact number of learnable scalars, CLS token and positional table included.
std::size_t param_count(const ViTConfig& config);

}  // namespace tovreg::vit
