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
#include <span>
#include <vector>

#include "tovreg/augment/image.hpp"

namespace tovreg::data {

// Raw H x W x C u8 pixels (channel-last) -> C' x out x out float image in
// [0, 1]: scaled by 1/255, bilinearly resized, and reduced to one luminance
// channel when `grayscale` (C' = 1) or kept as is (C' = C). Throws
// ContractError on an empty image.
augment::Image preprocess(std::span<const std::uint8_t> raw, int height, int width, int channels, int out = 84,
                          bool grayscale = true);

// Same for a float C x H x W image already in [0, 1].
augment::Image preprocess(const augment::Image& img, int out = 84, bool grayscale = true);

// Concatenates single-channel frames along the channel axis, oldest first.
augment::Image stack_frames(std::span<const augment::Image> frames);

// C x H x W float in [0, 1] -> H x W x C bytes, rounded to nearest.
std::vector<std::uint8_t> to_bytes(const augment::Image& img);

}  // namespace tovreg::data
