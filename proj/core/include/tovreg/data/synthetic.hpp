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
#include <string_view>

#include "tovreg/data/store.hpp"

namespace tovreg::data {

enum class SyntheticKind { kMovingDot, kNoise };

// "moving_dot" or "noise"; throws ConfigError otherwise.
SyntheticKind parse_synthetic_kind(std::string_view name);
std::string to_string(SyntheticKind kind);

struct SyntheticOptions {
  SyntheticKind kind = SyntheticKind::kMovingDot;
  int episodes = 50;
  int frames_per_episode = 42;
  int image_size = 84;
  int channels = 3;
  std::uint64_t seed = 0;
};

// kMovingDot: a bright disc on a dark background drifting rightward at a
// constant per-episode speed while bouncing vertically. Observation t stacks
// the underlying frames t .. t + channels - 1 as channels (oldest first), so
// a single observation already shows the motion. The action label is the
// quadrant of the disc in the newest frame (0 top-left, 1 top-right,
// 2 bottom-left, 3 bottom-right). The horizontal speed is capped so the disc
// never leaves the frame, which keeps time's arrow visible in every triple.
//
// kNoise: iid uniform bytes and uniform random actions in [0, 4).
ObservationStore generate_synthetic(const SyntheticOptions& options);

}  // namespace tovreg::data
