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
#include <span>
#include <vector>

#include "tovreg/augment/image.hpp"

namespace tovreg::data {

struct Episode {
  std::size_t n_frames = 0;
  std::vector<std::uint8_t> frames;   // n_frames * H * W * C, channel-last
  std::vector<std::uint8_t> actions;  // n_frames entries, or empty

  friend bool operator==(const Episode&, const Episode&) = default;
};

// Episodic container of fixed-size u8 frames with optional per-frame action
// labels.
struct ObservationStore {
  int height = 84;
  int width = 84;
  int channels = 3;
  bool has_actions = false;
  std::vector<Episode> episodes;

  std::size_t frame_bytes() const {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width) * static_cast<std::size_t>(channels);
  }
  std::size_t total_frames() const;
  std::vector<std::size_t> episode_lengths() const;

  // Raw H x W x C bytes of frame t of episode e.
  std::span<const std::uint8_t> frame(std::size_t e, std::size_t t) const;
  int action(std::size_t e, std::size_t t) const;

  // Appends an episode; `actions` must be empty iff !has_actions.
  void add_episode(std::vector<std::uint8_t> frames, std::vector<std::uint8_t> actions = {});

  // Throws ContractError if any invariant is broken.
  void validate() const;

  friend bool operator==(const ObservationStore&, const ObservationStore&) = default;
};

// Frame as a C x H x W float image scaled to [0, 1].
augment::Image frame_image(const ObservationStore& store, std::size_t e, std::size_t t);

// OBSV container, little-endian:
//   "OBSV" | version u8 = 1 | flags u8 (bit 0: has_actions) | H u16 | W u16 |
//   C u8 | reserved u8 = 0 | n_episodes u32 |
//   per episode: n_frames u32 | frames u8 | actions u8 x n_frames (if flagged)
inline constexpr std::uint8_t kStoreVersion = 1;
inline constexpr std::size_t kStoreHeaderBytes = 16;

std::vector<std::uint8_t> encode_store(const ObservationStore& store);
// Throws FormatError (with the byte offset) on bad magic, version, flags,
// reserved byte, zero extents, zero-length episodes, truncation, or trailing
// bytes.
ObservationStore decode_store(std::span<const std::uint8_t> bytes);

void write_store(const std::filesystem::path& path, const ObservationStore& store);
ObservationStore read_store(const std::filesystem::path& path);

}  // namespace tovreg::data
