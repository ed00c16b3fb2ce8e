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

#include "tovreg/data/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "tovreg/errors.hpp"
#include "tovreg/rng.hpp"

namespace tovreg::data {

SyntheticKind parse_synthetic_kind(std::string_view name) {
  if (name == "moving_dot") return SyntheticKind::kMovingDot;
  if (name == "noise") return SyntheticKind::kNoise;
  throw ConfigError("synthetic.kind", "expected moving_dot or noise, got '" + std::string(name) + "'");
}

std::string to_string(SyntheticKind kind) { return kind == SyntheticKind::kMovingDot ? "moving_dot" : "noise"; }

namespace {

constexpr std::uint8_t kBackground = 16;
constexpr std::uint8_t kForeground = 240;

struct DotPath {
  double x0, y0, vx, vy;
  double radius;
  int size;

  double x(int k) const { return x0 + vx * k; }

  // Vertical position reflected between the two walls.
  double y(int k) const {
    const double lo = radius + 1.0, hi = size - radius - 2.0;
    const double span = hi - lo;
    if (span <= 0.0) return 0.5 * (lo + hi);
    double p = std::fmod(y0 - lo + vy * k, 2.0 * span);
    if (p < 0.0) p += 2.0 * span;
    return lo + (p <= span ? p : 2.0 * span - p);
  }
};

void draw_disc(std::uint8_t* plane_hwc, int size, int channels, int channel, double cx, double cy, double r) {
  for (int yy = 0; yy < size; ++yy) {
    for (int xx = 0; xx < size; ++xx) {
      const double d = std::hypot(xx + 0.5 - cx, yy + 0.5 - cy);
      const double cover = std::clamp(r + 0.5 - d, 0.0, 1.0);
      const double v = kBackground + cover * (kForeground - kBackground);
      plane_hwc[(static_cast<std::size_t>(yy) * size + xx) * channels + channel] =
          static_cast<std::uint8_t>(std::lround(v));
    }
  }
}

}  // namespace

ObservationStore generate_synthetic(const SyntheticOptions& o) {
  if (o.episodes <= 0) throw ConfigError("synthetic.episodes", "must be positive");
  if (o.frames_per_episode <= 0) throw ConfigError("synthetic.frames", "must be positive");
  if (o.image_size < 8 || o.image_size > 0xFFFF) throw ConfigError("synthetic.image_size", "must be in [8, 65535]");
  if (o.channels <= 0 || o.channels > 255) throw ConfigError("synthetic.channels", "must be in [1, 255]");

  ObservationStore store;
  store.height = store.width = o.image_size;
  store.channels = o.channels;
  store.has_actions = true;
  Rng rng(substream(o.seed, streams::kSynthetic));
  const int S = o.image_size, C = o.channels, n = o.frames_per_episode;
  const std::size_t fb = store.frame_bytes();

  for (int e = 0; e < o.episodes; ++e) {
    std::vector<std::uint8_t> frames(fb * n);
    std::vector<std::uint8_t> actions(n);
    if (o.kind == SyntheticKind::kNoise) {
      for (auto& b : frames) b = static_cast<std::uint8_t>(rng.uniform_int(256));
      for (auto& a : actions) a = static_cast<std::uint8_t>(rng.uniform_int(4));
    } else {
      DotPath path;
      path.size = S;
      path.radius = std::max(2.0, S / 7.0);
      const int raw_frames = n + C - 1;
      const double room = S - 2.0 * path.radius - 2.0;
      const double max_speed = raw_frames > 1 ? room / (raw_frames - 1) : room;
      const double speed = std::min(rng.uniform(S / 12.0, S / 10.0), max_speed);
      path.vx = speed;
      const double travel = speed * (raw_frames - 1);
      path.x0 = rng.uniform(path.radius + 1.0, std::max(path.radius + 1.0, S - path.radius - 1.0 - travel));
      path.y0 = rng.uniform(path.radius + 1.0, S - path.radius - 2.0);
      path.vy = rng.uniform(-S / 64.0, S / 64.0);
      for (int t = 0; t < n; ++t) {
        std::uint8_t* obs = frames.data() + fb * t;
        for (int c = 0; c < C; ++c) draw_disc(obs, S, C, c, path.x(t + c), path.y(t + c), path.radius);
        const int k = t + C - 1;
        const int right = path.x(k) >= S / 2.0 ? 1 : 0;
        const int bottom = path.y(k) >= S / 2.0 ? 1 : 0;
        actions[t] = static_cast<std::uint8_t>(2 * bottom + right);
      }
    }
    store.add_episode(std::move(frames), std::move(actions));
  }
  return store;
}

}  // namespace tovreg::data
