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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tovreg/data/sampler.hpp"
#include "tovreg/data/store.hpp"
#include "tovreg/diff/grad_check.hpp"
#include "tovreg/diff/param_store.hpp"
#include "tovreg/ssl/optimizer.hpp"
#include "tovreg/vit/config.hpp"

namespace tovreg::ssl {

using diff::Var;

struct SSLConfig {
  double inv_coef = 25.0;
  double var_coef = 25.0;
  double cov_coef = 10.0;
  double temp_coef = 0.1;
  double gamma = 1.0;
  std::vector<int> expander = {1024, 1024, 1024};
  double base_lr = 0.6;  // scaled by batch_size / 256
  double weight_decay = 1e-6;
  double momentum = 0.9;
  bool lars = false;
  int epochs = 10;
  int warmup_epochs = 2;
  int batch_size = 64;
  bool augment = true;

  // Throws ConfigError naming the first invalid "ssl.*" key.
  void validate() const;

  double lr() const { return base_lr * batch_size / 256.0; }

  friend bool operator==(const SSLConfig&, const SSLConfig&) = default;
};

struct LossReport {
  double inv = 0, var = 0, cov = 0, temp = 0, total = 0;
  double inv_coef = 0, var_coef = 0, cov_coef = 0, temp_coef = 0;
};

template <typename T>
struct LossTerms {
  Var<T> inv, var, cov, temp, total;
  std::vector<int> labels;

  LossReport report(const SSLConfig& config) const;
};

// Encoder, expander and temporal head in one store.
template <typename T>
diff::ParamStore<T> init_model(const vit::ViTConfig& vit, const SSLConfig& ssl, std::uint64_t seed);

// The four views of a batch of triples, each N x C x S x S.
template <typename T>
struct TripleViews {
  diff::Tensor<T> view_a;  // tau(x_t)
  diff::Tensor<T> view_b;  // tau_prime(x_t)
  diff::Tensor<T> prev;    // tau_second(x_{t-1})
  diff::Tensor<T> next;    // tau_second(x_{t+1})
};

// Item i draws from Rng(seed ^ i) in the order tau(x_t), tau_prime(x_t),
// tau_second(x_{t-1}), tau_second(x_{t+1}). Frames whose size differs from
// `output_size` are resized bilinearly first. With `augment` off every view
// is the (resized) frame itself.
TripleViews<float> make_views(const data::TripleImages& triples, int output_size, std::uint64_t seed, bool augment);

template <typename T>
TripleViews<T> cast_views(const TripleViews<float>& views);

// Full objective on fixed views and temporal permutations. One encoder pass
// over all 4N views; the expander runs separately on each x_t view; the
// temporal head sees (y_{t-1}, y_t from view_a, y_{t+1}) in the given
// permutations.
template <typename T>
LossTerms<T> tov_vicreg_loss(diff::ParamStore<T>& params, const TripleViews<T>& views,
                             std::span<const int> permutations, const vit::ViTConfig& vit, const SSLConfig& ssl);

// zero_grad, loss, backward, optimizer step. Throws NumericalError on a
// non-finite loss, before any parameter is touched.
template <typename T>
LossReport train_step(diff::ParamStore<T>& params, SgdOptimizer<T>& optimizer, const TripleViews<T>& views,
                      std::span<const int> permutations, const vit::ViTConfig& vit, const SSLConfig& ssl,
                      double lr);

struct LogRow {
  int epoch = 0;          // 1-based
  std::size_t step = 0;   // 1-based, global
  LossReport loss;
  double lr = 0.0;
};

struct PretrainOptions {
  std::filesystem::path out_dir;  // empty: write nothing
  std::function<void(const LogRow&)> on_step;
};

struct PretrainResult {
  diff::ParamStore<float> params;
  std::vector<LogRow> log;
  std::size_t steps_per_epoch = 0;
  std::size_t batch_size = 0;
  std::vector<std::filesystem::path> checkpoints;
};

// Epochs over every valid triple center in shuffled order (partial final
// batches dropped; a store with fewer centers than batch_size trains on one
// batch of all of them). Linear warmup then cosine decay to 1e-6. With an
// out_dir, writes loss_log.csv and checkpoint_epoch{e}.tovp plus a .json
// sidecar per epoch. Seeds: init from `seed`, sampler, augmentation and
// temporal permutations from their substreams.
PretrainResult pretrain(const data::ObservationStore& store, const vit::ViTConfig& vit, const SSLConfig& ssl,
                        std::uint64_t seed, const PretrainOptions& options = {});

inline constexpr const char* kLossLogHeader = "epoch,step,inv,var,cov,temp,total,lr";
std::string loss_log_line(const LogRow& row);

// ---- checkpoints with configuration sidecar ----

struct ModelInfo {
  vit::ViTConfig vit;
  SSLConfig ssl;
  int epoch = 0;
  std::uint64_t seed = 0;
};

std::string sidecar_json(const ModelInfo& info);
// Throws ConfigError naming the offending key.
ModelInfo parse_sidecar(const std::string& text);
std::filesystem::path sidecar_path(const std::filesystem::path& checkpoint);

void save_model(const std::filesystem::path& checkpoint, const diff::ParamStore<float>& params,
                const ModelInfo& info);

struct LoadedModel {
  diff::ParamStore<float> params;
  ModelInfo info;
};

// Reads the sidecar, builds the matching structure and fills it from the
// checkpoint (every parameter must be present with its shape).
LoadedModel load_model(const std::filesystem::path& checkpoint);

// ---- temporal order verification on held-out triples ----

struct TemporalEval {
  double accuracy = 0.0;  // over 2 * triples decisions
  double mean_loss = 0.0;
  std::size_t triples = 0;
};

// Each center is scored twice: in true order (label 0) and reversed
// (label 1), views drawn as in training. Balanced by construction. A logit
// > 0 predicts "shuffled".
TemporalEval evaluate_temporal_order(const diff::ParamStore<float>& params, const vit::ViTConfig& vit,
                                     const data::ObservationStore& store, std::span<const data::FrameIndex> centers,
                                     std::uint64_t seed, bool augment = true, std::size_t batch_size = 64);

// Central-difference check of the full objective at 64-bit: random frames
// in [0, 1], augmented once into fixed views, random temporal permutations,
// then every trainable entry of init_model(vit, ssl, seed) is perturbed. The
// CLS token and positional table are redrawn from truncated-normal(0.02)
// first: at their zero init the final LayerNorm is evaluated where the
// variance is close to its eps and finite differences lose accuracy.
diff::GradCheckReport check_objective_gradients(const vit::ViTConfig& vit, const SSLConfig& ssl, std::size_t batch,
                                                std::uint64_t seed, const diff::GradCheckOptions& options = {});

// Copy whose entries do not require gradients; forward passes on it build
// no backward graph.
template <typename T>
diff::ParamStore<T> frozen(const diff::ParamStore<T>& params);

}  // namespace tovreg::ssl
