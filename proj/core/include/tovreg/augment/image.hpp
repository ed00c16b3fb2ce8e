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
#include <vector>

#include "tovreg/diff/tensor.hpp"
#include "tovreg/rng.hpp"

// Photometric and geometric image transforms on C x H x W float images with
// values in [0, 1]. Every photometric op clamps its output to [0, 1].
namespace tovreg::augment {

using Image = diff::Tensor<float>;

Image make_image(int channels, int height, int width, float fill = 0.0f);
inline int channels(const Image& img) { return static_cast<int>(img.dim(0)); }
inline int height(const Image& img) { return static_cast<int>(img.dim(1)); }
inline int width(const Image& img) { return static_cast<int>(img.dim(2)); }

// ---- geometry ----

struct CropBox {
  int top = 0;
  int left = 0;
  int height = 0;
  int width = 0;
};

Image crop(const Image& img, const CropBox& box);

// Bilinear, half-pixel centers (align_corners = false), no antialiasing.
Image resize_bilinear(const Image& img, int out_height, int out_width);

// Area fraction in [scale_min, scale_max], log-uniform aspect ratio in
// [ratio_min, ratio_max]; up to 10 attempts, then a centered crop with the
// aspect clamped into the ratio interval.
CropBox sample_crop(int img_height, int img_width, double scale_min, double scale_max, double ratio_min,
                    double ratio_max, Rng& rng);

Image random_resized_crop(const Image& img, int output_size, double scale_min, double scale_max, double ratio_min,
                          double ratio_max, Rng& rng);

Image hflip(const Image& img);

// ---- photometric ----

struct JitterStrengths {
  double brightness = 0.4;
  double contrast = 0.4;
  double saturation = 0.2;
  double hue = 0.1;
};

struct JitterParams {
  std::array<int, 4> order = {0, 1, 2, 3};  // 0 brightness, 1 contrast, 2 saturation, 3 hue
  double brightness = 1.0;
  double contrast = 1.0;
  double saturation = 1.0;
  double hue = 0.0;
};

// Draw order: the sub-transform order (Fisher-Yates over 4), then the
// brightness, contrast, saturation and hue factors. Zero strength means the
// factor is fixed (1, or 0 for hue) and no number is drawn for it.
JitterParams sample_jitter(const JitterStrengths& strengths, Rng& rng);
Image apply_jitter(const Image& img, const JitterParams& params);
Image color_jitter(const Image& img, const JitterStrengths& strengths, Rng& rng);

Image adjust_brightness(const Image& img, double factor);
// Blends with the mean luminance of the whole image.
Image adjust_contrast(const Image& img, double factor);
// Blends with per-pixel luminance; identity unless C == 3.
Image adjust_saturation(const Image& img, double factor);
// Rotates hue by `shift` turns in HSV; identity unless C == 3.
Image adjust_hue(const Image& img, double shift);

// Luminance 0.299 R + 0.587 G + 0.114 B copied to all channels; identity
// unless C == 3.
Image to_grayscale(const Image& img);

// Normalized 1-D Gaussian taps, size odd.
std::vector<double> gaussian_kernel(int size, double sigma);
// Separable blur with reflect padding.
Image gaussian_blur(const Image& img, int kernel_size, double sigma);

// v -> 1 - v where v >= threshold.
Image solarize(const Image& img, double threshold);

}  // namespace tovreg::augment
