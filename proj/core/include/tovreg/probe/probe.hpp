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
#include "tovreg/diff/param_store.hpp"
#include "tovreg/probe/f1.hpp"
#include "tovreg/vit/config.hpp"

namespace tovreg::probe {

using diff::Tensor;

struct ProbeConfig {
  int epochs = 100;
  int batch_size = 256;
  double lr = 1e-3;
  int n_actions = 0;  // 0: max label + 1 (at least 2)
  bool freeze_encoder = true;
  F1Average f1_average = F1Average::kMacro;
  std::uint64_t seed = 0;

  // Throws ConfigError naming the first invalid "probe.*" key.
  void validate() const;
};

// Linear map D -> K.
struct LinearProbe {
  Tensor<double> weight;  // D x K
  Tensor<double> bias;    // K

  int n_classes() const { return static_cast<int>(bias.size()); }
  std::vector<double> logits(const Tensor<double>& features) const;  // N x K, row-major
  std::vector<int> predict(const Tensor<double>& features) const;     // argmax, lowest index on ties
};

struct ProbeTraining {
  LinearProbe probe;
  std::vector<double> loss_curve;  // mean cross-entropy per epoch
};

// Softmax cross-entropy with Adam (no weight decay), mini-batches reshuffled
// each epoch from substream(seed, probe). Weights start at zero. Throws
// ContractError on a label outside [0, n_actions).
ProbeTraining train_linear_probe(const Tensor<double>& features, std::span<const int> labels,
                                 const ProbeConfig& config);

struct ProbeRun {
  ProbeTraining training;
  diff::ParamStore<float> encoder;  // after training; equal to the input when frozen
  std::uint64_t encoder_hash_before = 0;
  std::uint64_t encoder_hash_after = 0;
};

// Frozen: encodes the training frames once (eval mode) and fits the head on
// the cached features. Unfrozen: trains encoder and head jointly in 32-bit
// with the same optimizer and schedule.
ProbeRun train_probe(const diff::ParamStore<float>& encoder, const vit::ViTConfig& vit,
                     const data::ObservationStore& store, const data::LabeledFrames& train, const ProbeConfig& config);

int infer_classes(std::span<const int> labels, int configured);

// ---- results table ----

inline constexpr const char* kProbeHeader = "store,checkpoint,epoch,split,f1_macro,f1_weighted,accuracy";

struct ProbeRow {
  std::string store;
  std::string checkpoint;
  int epoch = 0;
  std::string split;  // "train" or "test"
  double f1_macro = 0.0;
  double f1_weighted = 0.0;
  double accuracy = 0.0;
};

std::string probe_row_line(const ProbeRow& row);
void write_probe_results(const std::filesystem::path& path, std::span<const ProbeRow> rows);

// Per checkpoint (first-appearance order), the mean over stores of the test
// split's F1 under `average`.
std::vector<double> checkpoint_f1_means(std::span<const ProbeRow> rows, F1Average average);

// One score per data row (header skipped), taken from the last column.
std::vector<double> read_score_csv(const std::filesystem::path& path);

// pearson(checkpoint_f1_means, scores). Throws ContractError when the lengths
// differ or fewer than three checkpoints are present.
double probe_pearson(std::span<const ProbeRow> rows, std::span<const double> scores, F1Average average);

// ---- feature cache: N u32 | D u32 | N*D float32, little-endian ----

void write_feature_cache(const std::filesystem::path& path, const Tensor<float>& features);
Tensor<float> read_feature_cache(const std::filesystem::path& path);

}  // namespace tovreg::probe
