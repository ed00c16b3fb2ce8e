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


#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tovreg/augment/image.hpp"
#include "tovreg/augment/pipeline.hpp"
#include "tovreg/errors.hpp"
#include "tovreg/rng.hpp"

namespace tovreg::augment {
namespace {

Image random_image(int c, int h, int w, std::uint64_t seed) {
  Rng rng(seed);
  Image img = make_image(c, h, w);
  for (float& v : img.data()) v = static_cast<float>(rng.uniform());
  return img;
}

float max_abs_diff(const Image& a, const Image& b) {
  float m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

bool in_unit_range(const Image& img) {
  return std::all_of(img.data().begin(), img.data().end(), [](float v) { return v >= 0.0f && v <= 1.0f; });
}

TEST(AugCrop, FullScaleSquareRatioIsIdentity) {
  const auto img = random_image(3, 84, 84, 1);
  Rng rng(2);
  const auto out = random_resized_crop(img, 84, 1.0, 1.0, 1.0, 1.0, rng);
  EXPECT_LT(max_abs_diff(img, out), 1e-6f);
}

TEST(AugCrop, OutputShapeAndConstantPreserved) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto img = make_image(3, 30 + trial, 50, 0.37f);
    const auto out = random_resized_crop(img, 84, 0.08, 1.0, 3.0 / 4.0, 4.0 / 3.0, rng);
    ASSERT_EQ(out.shape(), (diff::Shape{3, 84, 84}));
    for (float v : out.data()) EXPECT_NEAR(v, 0.37f, 1e-6f);
  }
}

TEST(AugCrop, SampledBoxesStayInsideAndRespectArea) {
  Rng rng(4);
  for (int trial = 0; trial < 500; ++trial) {
    const auto b = sample_crop(84, 84, 0.08, 1.0, 3.0 / 4.0, 4.0 / 3.0, rng);
    EXPECT_GE(b.top, 0);
    EXPECT_GE(b.left, 0);
    EXPECT_LE(b.top + b.height, 84);
    EXPECT_LE(b.left + b.width, 84);
    EXPECT_GE(b.height * b.width, 1);
  }
  // impossible request falls back to a centered crop
  const auto f = sample_crop(10, 100, 1.0, 1.0, 1.0, 1.0, rng);
  EXPECT_EQ(f.height, 10);
  EXPECT_EQ(f.width, 10);
  EXPECT_EQ(f.left, 45);
}

TEST(AugResize, HalfPixelCentersOnUpsample) {
  Image img = make_image(1, 1, 2);
  img[0] = 0.0f;
  img[1] = 1.0f;
  const auto out = resize_bilinear(img, 1, 4);
  // output centers at 0.25, 0.75, 1.25, 1.75 in input pixel units -> clamp, 0.25, 0.75, clamp
  EXPECT_NEAR(out[0], 0.0f, 1e-7f);
  EXPECT_NEAR(out[1], 0.25f, 1e-7f);
  EXPECT_NEAR(out[2], 0.75f, 1e-7f);
  EXPECT_NEAR(out[3], 1.0f, 1e-7f);
}

TEST(AugJitter, ZeroStrengthIsIdentity) {
  const auto img = random_image(3, 8, 8, 5);
  Rng rng(6);
  const auto out = color_jitter(img, {0, 0, 0, 0}, rng);
  EXPECT_LT(max_abs_diff(img, out), 1e-6f);
}

TEST(AugJitter, BrightnessIsMultiplicative) {
  const auto out = adjust_brightness(make_image(1, 2, 2, 0.2f), 2.0);
  for (float v : out.data()) EXPECT_NEAR(v, 0.4f, 1e-7f);
  const auto clamped = adjust_brightness(make_image(1, 2, 2, 0.8f), 2.0);
  for (float v : clamped.data()) EXPECT_EQ(v, 1.0f);
}

TEST(AugJitter, ContrastBlendsWithMeanLuminance) {
  Image img = make_image(3, 1, 2);
  img.at({0, 0, 0}) = 0.2f;
  img.at({0, 0, 1}) = 0.6f;  // R channel only
  const double mean = 0.299 * 0.4;
  const auto out = adjust_contrast(img, 0.5);
  EXPECT_NEAR(out.at({0, 0, 0}), 0.5 * 0.2 + 0.5 * mean, 1e-6);
  EXPECT_NEAR(out.at({1, 0, 1}), 0.5 * mean, 1e-6);
}

TEST(AugJitter, GrayscaleFixedUnderSaturationAndHue) {
  const auto gray = to_grayscale(random_image(3, 6, 6, 7));
  EXPECT_LT(max_abs_diff(gray, adjust_saturation(gray, 1.7)), 1e-6f);
  EXPECT_LT(max_abs_diff(gray, adjust_hue(gray, 0.08)), 1e-6f);
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 6; ++x) {
      const auto ux = static_cast<std::size_t>(x), uy = static_cast<std::size_t>(y);
      EXPECT_EQ(gray.at({0, uy, ux}), gray.at({2, uy, ux}));
    }
}

TEST(AugJitter, HueFullTurnIsIdentity) {
  const auto img = random_image(3, 5, 5, 8);
  EXPECT_LT(max_abs_diff(img, adjust_hue(img, 1.0)), 1e-5f);
  EXPECT_LT(max_abs_diff(img, adjust_hue(adjust_hue(img, 0.1), -0.1)), 1e-5f);
}

TEST(AugJitter, SampledFactorsWithinStrengths) {
  Rng rng(9);
  for (int i = 0; i < 200; ++i) {
    const auto p = sample_jitter({0.4, 0.4, 0.2, 0.1}, rng);
    EXPECT_GE(p.brightness, 0.6);
    EXPECT_LE(p.brightness, 1.4);
    EXPECT_GE(p.saturation, 0.8);
    EXPECT_LE(std::abs(p.hue), 0.1);
    auto order = p.order;
    std::sort(order.begin(), order.end());
    EXPECT_EQ(order, (std::array<int, 4>{0, 1, 2, 3}));
  }
}

TEST(AugBlur, KernelNormalizedAndConstantPreserved) {
  const auto k = gaussian_kernel(7, 0.15);
  EXPECT_NEAR(std::accumulate(k.begin(), k.end(), 0.0), 1.0, 1e-12);
  EXPECT_EQ(k[0], k[6]);
  const auto c = gaussian_blur(make_image(3, 9, 9, 0.42f), 7, 0.2);
  for (float v : c.data()) EXPECT_NEAR(v, 0.42f, 1e-6f);
}

TEST(AugBlur, ImpulseGivesKernelOuterProduct) {
  Image img = make_image(1, 11, 11);
  img.at({0, 5, 5}) = 1.0f;
  const double sigma = 1.0;
  const auto k = gaussian_kernel(7, sigma);
  const auto out = gaussian_blur(img, 7, sigma);
  for (std::size_t y = 2; y <= 8; ++y)
    for (std::size_t x = 2; x <= 8; ++x) EXPECT_NEAR(out.at({0, y, x}), k[y - 2] * k[x - 2], 1e-7);
  EXPECT_NEAR(std::accumulate(out.data().begin(), out.data().end(), 0.0), 1.0, 1e-6);
}

TEST(AugSolarize, ThresholdRule) {
  Image img = make_image(1, 1, 3);
  img[0] = 0.9f;
  img[1] = 0.1f;
  img[2] = 120.0f / 255.0f;
  const auto out = solarize(img, 120.0 / 255.0);
  EXPECT_NEAR(out[0], 0.1f, 1e-6f);
  EXPECT_EQ(out[1], 0.1f);
  EXPECT_NEAR(out[2], 1.0f - 120.0f / 255.0f, 1e-6f);
  const auto twice = solarize(solarize(img, 120.0 / 255.0), 120.0 / 255.0);
  EXPECT_EQ(twice[1], 0.1f);
}

TEST(AugFlip, MirrorsColumns) {
  const auto img = random_image(2, 3, 4, 10);
  const auto f = hflip(img);
  EXPECT_EQ(f.at({1, 2, 0}), img.at({1, 2, 3}));
  EXPECT_EQ(hflip(f), img);
}

TEST(AugPipeline, DeterministicRangeAndShape) {
  const auto img = random_image(3, 84, 84, 11);
  for (auto id : {PipelineId::kTau, PipelineId::kTauPrime, PipelineId::kTauSecond}) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Rng a(seed), b(seed);
      const auto x = apply_pipeline(id, img, a);
      const auto y = apply_pipeline(id, img, b);
      EXPECT_EQ(x, y);
      EXPECT_EQ(x.shape(), img.shape());
      EXPECT_TRUE(in_unit_range(x));
    }
  }
}

TEST(AugPipeline, TauSecondKeepsNonSquareGeometry) {
  const auto img = random_image(3, 20, 30, 12);
  Rng rng(13);
  EXPECT_EQ(apply_pipeline(PipelineId::kTauSecond, img, rng).shape(), img.shape());
}

TEST(AugPipeline, TauWithNothingEnabledIsIdentity) {
  auto c = pipeline_config(PipelineId::kTau, 84);
  c.scale_min = c.scale_max = 1.0;
  c.ratio_min = c.ratio_max = 1.0;
  c.p_jitter = c.p_grayscale = c.p_blur = c.p_flip = 0.0;
  const auto img = random_image(3, 84, 84, 14);
  Rng rng(15);
  EXPECT_LT(max_abs_diff(apply_pipeline(c, img, rng), img), 1e-6f);
}

TEST(AugPipeline, ConfigsAndNames) {
  EXPECT_TRUE(pipeline_config(PipelineId::kTauPrime).solarize);
  EXPECT_FALSE(pipeline_config(PipelineId::kTau).solarize);
  EXPECT_FALSE(pipeline_config(PipelineId::kTauSecond).crop);
  EXPECT_DOUBLE_EQ(pipeline_config(PipelineId::kTauPrime).p_blur, 0.1);
  EXPECT_EQ(parse_pipeline("tau_prime"), PipelineId::kTauPrime);
  EXPECT_THROW(parse_pipeline("tau3"), ContractError);
  auto bad = pipeline_config(PipelineId::kTau);
  bad.p_flip = 1.5;
  EXPECT_THROW(bad.validate(), ContractError);
}

}  // namespace
}  // namespace tovreg::augment
