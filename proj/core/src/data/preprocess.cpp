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

#include "tovreg/data/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include "tovreg/errors.hpp"

namespace tovreg::data {

augment::Image preprocess(std::span<const std::uint8_t> raw, int height, int width, int channels, int out,
                          bool grayscale) {
  if (height <= 0 || width <= 0 || channels <= 0 || raw.empty()) throw ContractError("preprocess: empty image");
  if (raw.size() != static_cast<std::size_t>(height) * width * channels) {
    throw ContractError("preprocess: byte count does not match H*W*C");
  }
  augment::Image img = augment::make_image(channels, height, width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < channels; ++c) {
        img[(static_cast<std::size_t>(c) * height + y) * width + x] =
            static_cast<float>(raw[(static_cast<std::size_t>(y) * width + x) * channels + c]) / 255.0f;
      }
    }
  }
  return preprocess(img, out, grayscale);
}

augment::Image preprocess(const augment::Image& img, int out, bool grayscale) {
  if (img.rank() != 3 || img.size() == 0) throw ContractError("preprocess: expected a C x H x W image");
  augment::Image resized = augment::resize_bilinear(img, out, out);
  if (!grayscale) return resized;
  const int C = augment::channels(resized);
  const std::size_t n = static_cast<std::size_t>(out) * out;
  augment::Image gray = augment::make_image(1, out, out);
  if (C == 3) {
    const augment::Image g3 = augment::to_grayscale(resized);
    std::copy(g3.ptr(), g3.ptr() + n, gray.ptr());
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      float s = 0.0f;
      for (int c = 0; c < C; ++c) s += resized[c * n + i];
      gray[i] = s / static_cast<float>(C);
    }
  }
  return gray;
}

augment::Image stack_frames(std::span<const augment::Image> frames) {
  if (frames.empty()) throw ContractError("stack_frames: no frames");
  const int H = augment::height(frames[0]), W = augment::width(frames[0]);
  int C = 0;
  for (const auto& f : frames) {
    if (augment::height(f) != H || augment::width(f) != W) throw ContractError("stack_frames: size mismatch");
    C += augment::channels(f);
  }
  augment::Image out = augment::make_image(C, H, W);
  float* dst = out.ptr();
  for (const auto& f : frames) dst = std::copy(f.ptr(), f.ptr() + f.size(), dst);
  return out;
}

std::vector<std::uint8_t> to_bytes(const augment::Image& img) {
  const int C = augment::channels(img), H = augment::height(img), W = augment::width(img);
  std::vector<std::uint8_t> out(img.size());
  for (int c = 0; c < C; ++c) {
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        const float v = std::clamp(img[(static_cast<std::size_t>(c) * H + y) * W + x], 0.0f, 1.0f);
        out[(static_cast<std::size_t>(y) * W + x) * C + c] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
      }
    }
  }
  return out;
}

}  // namespace tovreg::data
