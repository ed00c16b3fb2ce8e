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
#include <string>
#include <unordered_map>

#include "tovreg/diff/param_store.hpp"

namespace tovreg::ssl {

using diff::ParamStore;
using diff::Tensor;

// SGD with momentum and L2 weight decay folded into the gradient. Rank-1
// parameters (biases, norm gains) get neither weight decay nor the LARS
// trust ratio.
//
//   g <- grad + wd * p                      (rank >= 2)
//   g <- g * eta * ||p|| / ||g||            (lars, rank >= 2, both norms > 0)
//   buf <- momentum * buf + g
//   p <- p - lr * buf
struct SgdOptions {
  double momentum = 0.9;
  double weight_decay = 1e-6;
  bool lars = false;
  double lars_eta = 0.001;
};

template <typename T>
class SgdOptimizer {
 public:
  explicit SgdOptimizer(SgdOptions options) : options_(options) {}

  // Updates every trainable parameter that has a gradient.
  void step(ParamStore<T>& params, double lr);

 private:
  SgdOptions options_;
  std::unordered_map<std::string, Tensor<T>> momentum_;
};

// Adam (no weight decay), bias-corrected.
template <typename T>
class AdamOptimizer {
 public:
  explicit AdamOptimizer(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(ParamStore<T>& params, double lr);

 private:
  double beta1_, beta2_, eps_;
  std::uint64_t t_ = 0;
  std::unordered_map<std::string, Tensor<T>> m_, v_;
};

// Linear warmup over `warmup_steps` (step s gets (s + 1) / warmup of base_lr,
// so the first update is not wasted at lr 0), then cosine decay from base_lr
// to final_lr at `total_steps`.
double scheduled_lr(std::size_t step, std::size_t total_steps, std::size_t warmup_steps, double base_lr,
                    double final_lr = 1e-6);

}  // namespace tovreg::ssl
