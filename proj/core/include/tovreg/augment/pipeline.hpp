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

#include <string>
#include <string_view>

#include "tovreg/augment/image.hpp"
#include "tovreg/rng.hpp"

namespace tovreg::augment {

// tau: view of x_t for the VICReg branch and the temporal head.
// tau_prime: second view of x_t (weaker blur, solarize).
// tau_second: photometric-only view of the neighbours x_{t-1}, x_{t+1}.
enum class PipelineId { kTau, kTauPrime, kTauSecond };

// Throws ContractError on anything other than "tau", "tau_prime",
// "tau_second".
PipelineId parse_pipeline(std::string_view name);
std::string to_string(PipelineId id);

struct AugConfig {
  int output_size = 84;
  bool crop = true;
  double scale_min = 0.08;
  double scale_max = 1.0;
  double ratio_min = 3.0 / 4.0;
  double ratio_max = 4.0 / 3.0;
  JitterStrengths jitter;
  double p_jitter = 0.8;
  double p_grayscale = 0.2;
  bool blur = true;
  double p_blur = 1.0;
  int blur_kernel = 7;
  double sigma_min = 0.1;
  double sigma_max = 0.2;
  bool solarize = false;
  double p_solarize = 0.2;
  double solarize_threshold = 120.0 / 255.0;
  bool flip = true;
  double p_flip = 0.5;

  // Throws ContractError on out-of-range probabilities or scale interval.
  void validate() const;
};

AugConfig pipeline_config(PipelineId id, int output_size = 84);

// Stages run in this order, each present stage drawing from `rng` as listed:
//   crop       sample_crop draws
//   jitter     bernoulli; if applied, sample_jitter draws
//   grayscale  bernoulli
//   blur       bernoulli; if applied, sigma
//   solarize   bernoulli
//   flip       bernoulli
// Absent stages draw nothing. Without crop the spatial size is unchanged.
Image apply_pipeline(const AugConfig& config, const Image& img, Rng& rng);
Image apply_pipeline(PipelineId id, const Image& img, Rng& rng);

}  // namespace tovreg::augment
