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

#include "tovreg/augment/pipeline.hpp"

#include "tovreg/errors.hpp"

namespace tovreg::augment {

PipelineId parse_pipeline(std::string_view name) {
  if (name == "tau") return PipelineId::kTau;
  if (name == "tau_prime") return PipelineId::kTauPrime;
  if (name == "tau_second") return PipelineId::kTauSecond;
  throw ContractError("unknown augmentation pipeline '" + std::string(name) + "'");
}

std::string to_string(PipelineId id) {
  switch (id) {
    case PipelineId::kTau: return "tau";
    case PipelineId::kTauPrime: return "tau_prime";
    case PipelineId::kTauSecond: return "tau_second";
  }
  throw ContractError("unknown augmentation pipeline id");
}

void AugConfig::validate() const {
  auto prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw ContractError(std::string("AugConfig: ") + name + " outside [0, 1]");
  };
  prob(p_jitter, "p_jitter");
  prob(p_grayscale, "p_grayscale");
  prob(p_blur, "p_blur");
  prob(p_solarize, "p_solarize");
  prob(p_flip, "p_flip");
  if (!(scale_min > 0.0 && scale_min <= scale_max && scale_max <= 1.0)) {
    throw ContractError("AugConfig: scale interval must lie in (0, 1]");
  }
  if (!(ratio_min > 0.0 && ratio_min <= ratio_max)) throw ContractError("AugConfig: bad ratio interval");
  if (!(sigma_min > 0.0 && sigma_min <= sigma_max)) throw ContractError("AugConfig: bad sigma interval");
  if (output_size <= 0) throw ContractError("AugConfig: output_size must be positive");
}

AugConfig pipeline_config(PipelineId id, int output_size) {
  AugConfig c;
  c.output_size = output_size;
  switch (id) {
    case PipelineId::kTau:
      break;
    case PipelineId::kTauPrime:
      c.p_blur = 0.1;
      c.solarize = true;
      break;
    case PipelineId::kTauSecond:
      c.crop = false;
      c.blur = false;
      c.flip = false;
      break;
  }
  return c;
}

Image apply_pipeline(const AugConfig& config, const Image& img, Rng& rng) {
  Image out = img;
  if (config.crop) {
    out = random_resized_crop(out, config.output_size, config.scale_min, config.scale_max, config.ratio_min,
                              config.ratio_max, rng);
  }
  if (rng.bernoulli(config.p_jitter)) out = apply_jitter(out, sample_jitter(config.jitter, rng));
  if (rng.bernoulli(config.p_grayscale)) out = to_grayscale(out);
  if (config.blur && rng.bernoulli(config.p_blur)) {
    out = gaussian_blur(out, config.blur_kernel, rng.uniform(config.sigma_min, config.sigma_max));
  }
  if (config.solarize && rng.bernoulli(config.p_solarize)) out = solarize(out, config.solarize_threshold);
  if (config.flip && rng.bernoulli(config.p_flip)) out = hflip(out);
  return out;
}

Image apply_pipeline(PipelineId id, const Image& img, Rng& rng) {
  return apply_pipeline(pipeline_config(id, height(img)), img, rng);
}

}  // namespace tovreg::augment
