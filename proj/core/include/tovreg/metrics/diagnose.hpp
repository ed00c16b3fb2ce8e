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
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tovreg/data/sampler.hpp"
#include "tovreg/metrics/collapse.hpp"
#include "tovreg/vit/config.hpp"

namespace tovreg::metrics {

struct DiagnoseOptions {
  std::size_t sample_n = 256;
  std::size_t similarity_m = 64;
  double sparsity_tol = 1e-6;
  std::uint64_t seed = 0;
  std::size_t batch_size = 32;
};

struct DiagnosticsBundle {
  double std_metric = 0.0;
  CorrelationResult corr;
  Vector singular_values;
  Matrix similarity;
  std::vector<double> sparsity;  // per block
  std::vector<Matrix> attention;  // per head, grid x grid, first sampled frame
  std::size_t n = 0;
  std::size_t d = 0;
  std::uint64_t seed = 0;
  std::vector<data::FrameIndex> frames;  // sampled frames, ascending
};

// Eval-mode encoder representations (N x embed_dim) of the given frames,
// without augmentation.
diff::Tensor<float> encode_frames(const diff::ParamStore<float>& params, const vit::ViTConfig& vit,
                                  const data::ObservationStore& store, std::span<const data::FrameIndex> frames,
                                  std::size_t batch_size = 32);

// Samples min(sample_n, total frames) frames uniformly without replacement
// (substream(seed, diagnose)), sorts them by (episode, t), and computes every
// metric. The similarity matrix covers the first similarity_m sampled
// frames. Requires at least three frames.
DiagnosticsBundle diagnose(const diff::ParamStore<float>& params, const vit::ViTConfig& vit,
                           const data::ObservationStore& store, const DiagnoseOptions& options);

// spectrum.csv (index,value; 1-based index, zero values as empty cells),
// similarity.csv (M rows of M values), sparsity.csv (layer,ratio; 1-based),
// summary.json ({std, corr, n, d, seed}), attention_head{h}.csv (grid rows,
// 0-based h).
void write_diagnostics(const DiagnosticsBundle& bundle, const std::filesystem::path& dir);
std::string summary_json(const DiagnosticsBundle& bundle);

}  // namespace tovreg::metrics
