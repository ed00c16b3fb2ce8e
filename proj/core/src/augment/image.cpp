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

Image make_image(int channels, int height, int width, float fill) {
  if (channels <= 0 || height <= 0 || width <= 0) throw ContractError("make_image: non-positive extent");
  return Image({static_cast<std::size_t>(channels), static_cast<std::size_t>(height), static_cast<std::size_t>(width)},
               fill);
}

Image crop(const Image& img, const CropBox& box) {
  const int C = channels(img), H = height(img), W = width(img);
  if (box.height <= 0 || box.width <= 0 || box.top < 0 || box.left < 0 || box.top + box.height > H ||
      box.left + box.width > W) {
    throw ContractError("crop: box outside image");
  }
  Image out = make_image(C, box.height, box.width);
  for (int c = 0; c < C; ++c) {
    for (int y = 0; y < box.height; ++y) {
      const float* src = img.ptr() + (static_cast<std::size_t>(c) * H + box.top + y) * W + box.left;
      float* dst = out.ptr() + (static_cast<std::size_t>(c) * box.height + y) * box.width;
      std::copy(src, src + box.width, dst);
    }
  }
  return out;
}

namespace {

struct Tap {
  int i0, i1;
  float w1;
};

std::vector<Tap> bilinear_taps(int in, int out) {
  std::vector<Tap> taps(out);
  const double scale = static_cast<double>(in) / out;
  for (int o = 0; o < out; ++o) {
    double src = (o + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    const int i0 = static_cast<int>(std::floor(src));
    const int i1 = std::min(i0 + 1, in - 1);
    taps[o] = {i0, i1, static_cast<float>(src - i0)};
  }
  return taps;
}

}  // namespace

Image resize_bilinear(const Image& img, int out_height, int out_width) {
  const int C = channels(img), H = height(img), W = width(img);
  if (out_height <= 0 || out_width <= 0) throw ContractError("resize_bilinear: non-positive output size");
  if (H == out_height && W == out_width) return img;
  const auto ty = bilinear_taps(H, out_height);
  const auto tx = bilinear_taps(W, out_width);
  Image out = make_image(C, out_height, out_width);
  for (int c = 0; c < C; ++c) {
    const float* plane = img.ptr() + static_cast<std::size_t>(c) * H * W;
    float* dst = out.ptr() + static_cast<std::size_t>(c) * out_height * out_width;
    for (int y = 0; y < out_height; ++y) {
      const float* r0 = plane + static_cast<std::size_t>(ty[y].i0) * W;
      const float* r1 = plane + static_cast<std::size_t>(ty[y].i1) * W;
      const float wy = ty[y].w1;
      for (int x = 0; x < out_width; ++x) {
        const Tap& t = tx[x];
        const float top = r0[t.i0] + (r0[t.i1] - r0[t.i0]) * t.w1;
        const float bot = r1[t.i0] + (r1[t.i1] - r1[t.i0]) * t.w1;
        dst[static_cast<std::size_t>(y) * out_width + x] = top + (bot - top) * wy;
      }
    }
  }
  return out;
}

Image hflip(const Image& img) {
  const int C = channels(img), H = height(img), W = width(img);
  Image out = make_image(C, H, W);
  for (int row = 0; row < C * H; ++row) {
    const float* src = img.ptr() + static_cast<std::size_t>(row) * W;
    float* dst = out.ptr() + static_cast<std::size_t>(row) * W;
    std::reverse_copy(src, src + W, dst);
  }
  return out;
}

}  // namespace tovreg::augment
