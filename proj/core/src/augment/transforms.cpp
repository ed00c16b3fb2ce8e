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

#include <algorithm>
#include <cmath>

#include "tovreg/augment/image.hpp"
#include "tovreg/errors.hpp"

namespace tovreg::augment {

namespace {

inline float clamp01(float v) { return std::clamp(v, 0.0f, 1.0f); }

constexpr float kLumR = 0.299f, kLumG = 0.587f, kLumB = 0.114f;

std::size_t plane_size(const Image& img) { return static_cast<std::size_t>(height(img)) * width(img); }

}  // namespace

CropBox sample_crop(int img_height, int img_width, double scale_min, double scale_max, double ratio_min,
                    double ratio_max, Rng& rng) {
  if (img_height <= 0 || img_width <= 0) throw ContractError("sample_crop: empty image");
  const double area = static_cast<double>(img_height) * img_width;
  const double log_lo = std::log(ratio_min), log_hi = std::log(ratio_max);
  for (int attempt = 0; attempt < 10; ++attempt) {
    const double target = area * rng.uniform(scale_min, scale_max);
    const double aspect = std::exp(rng.uniform(log_lo, log_hi));
    const int w = static_cast<int>(std::lround(std::sqrt(target * aspect)));
    const int h = static_cast<int>(std::lround(std::sqrt(target / aspect)));
    if (w > 0 && h > 0 && w <= img_width && h <= img_height) {
      const int top = static_cast<int>(rng.uniform_int(0, img_height - h));
      const int left = static_cast<int>(rng.uniform_int(0, img_width - w));
      return {top, left, h, w};
    }
  }
  // Fallback: the whole image, trimmed to the nearest allowed aspect.
  const double in_ratio = static_cast<double>(img_width) / img_height;
  int w = img_width, h = img_height;
  if (in_ratio < ratio_min) {
    h = std::max(1, static_cast<int>(std::lround(w / ratio_min)));
  } else if (in_ratio > ratio_max) {
    w = std::max(1, static_cast<int>(std::lround(h * ratio_max)));
  }
  h = std::min(h, img_height);
  w = std::min(w, img_width);
  return {(img_height - h) / 2, (img_width - w) / 2, h, w};
}

Image random_resized_crop(const Image& img, int output_size, double scale_min, double scale_max, double ratio_min,
                          double ratio_max, Rng& rng) {
  const CropBox box = sample_crop(height(img), width(img), scale_min, scale_max, ratio_min, ratio_max, rng);
  return resize_bilinear(crop(img, box), output_size, output_size);
}

// ---- photometric ----

Image adjust_brightness(const Image& img, double factor) {
  Image out = img;
  const float f = static_cast<float>(factor);
  for (float& v : out.data()) v = clamp01(v * f);
  return out;
}

namespace {

// Per-pixel luminance plane; the single channel itself when C != 3.
std::vector<float> luminance(const Image& img) {
  const std::size_t n = plane_size(img);
  std::vector<float> lum(n);
  if (channels(img) == 3) {
    const float* r = img.ptr();
    const float* g = r + n;
    const float* b = g + n;
    for (std::size_t i = 0; i < n; ++i) lum[i] = kLumR * r[i] + kLumG * g[i] + kLumB * b[i];
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      float s = 0.0f;
      for (int c = 0; c < channels(img); ++c) s += img[c * n + i];
      lum[i] = s / static_cast<float>(channels(img));
    }
  }
  return lum;
}

}  // namespace

Image adjust_contrast(const Image& img, double factor) {
  const auto lum = luminance(img);
  double total = 0.0;
  for (float v : lum) total += v;
  const float mean = static_cast<float>(total / static_cast<double>(lum.size()));
  const float f = static_cast<float>(factor);
  Image out = img;
  for (float& v : out.data()) v = clamp01(f * v + (1.0f - f) * mean);
  return out;
}

Image adjust_saturation(const Image& img, double factor) {
  if (channels(img) != 3) return img;
  const auto lum = luminance(img);
  const std::size_t n = lum.size();
  const float f = static_cast<float>(factor);
  Image out = img;
  for (int c = 0; c < 3; ++c) {
    float* p = out.ptr() + c * n;
    for (std::size_t i = 0; i < n; ++i) p[i] = clamp01(f * p[i] + (1.0f - f) * lum[i]);
  }
  return out;
}

Image adjust_hue(const Image& img, double shift) {
  if (channels(img) != 3 || shift == 0.0) return img;
  const std::size_t n = plane_size(img);
  Image out = img;
  float* r = out.ptr();
  float* g = r + n;
  float* b = g + n;
  for (std::size_t i = 0; i < n; ++i) {
    const double R = r[i], G = g[i], B = b[i];
    const double mx = std::max({R, G, B}), mn = std::min({R, G, B});
    const double delta = mx - mn;
    if (delta <= 0.0) continue;  // achromatic: hue rotation is a no-op
    const double s = delta / mx;
    double h;
    if (mx == R) {
      h = (G - B) / delta;
    } else if (mx == G) {
      h = 2.0 + (B - R) / delta;
    } else {
      h = 4.0 + (R - G) / delta;
    }
    h = h / 6.0 + shift;
    h -= std::floor(h);
    // HSV -> RGB with v = mx.
    const double hh = h * 6.0;
    const int sector = static_cast<int>(std::floor(hh)) % 6;
    const double frac = hh - std::floor(hh);
    const double v = mx;
    const double p = v * (1.0 - s), q = v * (1.0 - s * frac), t = v * (1.0 - s * (1.0 - frac));
    double nr, ng, nb;
    switch (sector) {
      case 0: nr = v, ng = t, nb = p; break;
      case 1: nr = q, ng = v, nb = p; break;
      case 2: nr = p, ng = v, nb = t; break;
      case 3: nr = p, ng = q, nb = v; break;
      case 4: nr = t, ng = p, nb = v; break;
      default: nr = v, ng = p, nb = q; break;
    }
    r[i] = clamp01(static_cast<float>(nr));
    g[i] = clamp01(static_cast<float>(ng));
    b[i] = clamp01(static_cast<float>(nb));
  }
  return out;
}

Image to_grayscale(const Image& img) {
  if (channels(img) != 3) return img;
  const auto lum = luminance(img);
  const std::size_t n = lum.size();
  Image out = img;
  for (int c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < n; ++i) out[c * n + i] = clamp01(lum[i]);
  }
  return out;
}

JitterParams sample_jitter(const JitterStrengths& s, Rng& rng) {
  JitterParams p;
  rng.shuffle(p.order.begin(), p.order.end());
  if (s.brightness > 0) p.brightness = rng.uniform(std::max(0.0, 1.0 - s.brightness), 1.0 + s.brightness);
  if (s.contrast > 0) p.contrast = rng.uniform(std::max(0.0, 1.0 - s.contrast), 1.0 + s.contrast);
  if (s.saturation > 0) p.saturation = rng.uniform(std::max(0.0, 1.0 - s.saturation), 1.0 + s.saturation);
  if (s.hue > 0) p.hue = rng.uniform(-s.hue, s.hue);
  return p;
}

Image apply_jitter(const Image& img, const JitterParams& params) {
  Image out = img;
  for (int op : params.order) {
    switch (op) {
      case 0: out = adjust_brightness(out, params.brightness); break;
      case 1: out = adjust_contrast(out, params.contrast); break;
      case 2: out = adjust_saturation(out, params.saturation); break;
      case 3: out = adjust_hue(out, params.hue); break;
      default: throw ContractError("apply_jitter: bad sub-transform index");
    }
  }
  return out;
}

Image color_jitter(const Image& img, const JitterStrengths& strengths, Rng& rng) {
  return apply_jitter(img, sample_jitter(strengths, rng));
}

std::vector<double> gaussian_kernel(int size, double sigma) {
  if (size <= 0 || size % 2 == 0) throw ContractError("gaussian_kernel: size must be odd and positive");
  if (!(sigma > 0)) throw ContractError("gaussian_kernel: sigma must be positive");
  std::vector<double> k(size);
  const int half = size / 2;
  double total = 0.0;
  for (int i = 0; i < size; ++i) {
    const double x = (i - half) / sigma;
    k[i] = std::exp(-0.5 * x * x);
    total += k[i];
  }
  for (double& v : k) v /= total;
  return k;
}

namespace {

// Reflect without repeating the edge sample: -1 -> 1, n -> n - 2.
int reflect(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

}  // namespace

Image gaussian_blur(const Image& img, int kernel_size, double sigma) {
  const auto k = gaussian_kernel(kernel_size, sigma);
  const int half = kernel_size / 2;
  const int C = channels(img), H = height(img), W = width(img);
  Image tmp = make_image(C, H, W);
  Image out = make_image(C, H, W);
  for (int c = 0; c < C; ++c) {
    const float* src = img.ptr() + static_cast<std::size_t>(c) * H * W;
    float* mid = tmp.ptr() + static_cast<std::size_t>(c) * H * W;
    float* dst = out.ptr() + static_cast<std::size_t>(c) * H * W;
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        double acc = 0.0;
        for (int t = -half; t <= half; ++t) acc += k[t + half] * src[y * W + reflect(x + t, W)];
        mid[y * W + x] = static_cast<float>(acc);
      }
    }
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        double acc = 0.0;
        for (int t = -half; t <= half; ++t) acc += k[t + half] * mid[reflect(y + t, H) * W + x];
        dst[y * W + x] = clamp01(static_cast<float>(acc));
      }
    }
  }
  return out;
}

Image solarize(const Image& img, double threshold) {
  Image out = img;
  const float th = static_cast<float>(threshold);
  for (float& v : out.data()) {
    if (v >= th) v = 1.0f - v;
  }
  return out;
}

}  // namespace tovreg::augment
