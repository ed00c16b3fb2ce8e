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

#include "tovreg/data/sampler.hpp"

#include <algorithm>
#include <string>

#include "tovreg/errors.hpp"

namespace tovreg::data {

std::vector<FrameIndex> valid_centers(const ObservationStore& store) {
  std::vector<FrameIndex> out;
  for (std::size_t e = 0; e < store.episodes.size(); ++e) {
    const std::size_t n = store.episodes[e].n_frames;
    for (std::size_t t = 1; t + 1 < n; ++t) out.push_back({e, t});
  }
  return out;
}

std::vector<FrameIndex> sample_triples(const ObservationStore& store, std::size_t batch_size, Rng& rng) {
  const auto centers = valid_centers(store);
  if (centers.empty()) throw ContractError("no episode has three consecutive frames");
  std::vector<FrameIndex> out(batch_size);
  for (auto& f : out) f = centers[rng.uniform_int(centers.size())];
  return out;
}

TripleSampler::TripleSampler(const ObservationStore& store, std::uint64_t seed)
    : centers_(valid_centers(store)), seed_(seed) {
  if (centers_.empty()) throw ContractError("no episode has three consecutive frames");
}

std::vector<FrameIndex> TripleSampler::epoch_order(std::size_t epoch) const {
  std::vector<FrameIndex> order = centers_;
  Rng rng(substream(seed_, epoch));
  rng.shuffle(order.begin(), order.end());
  return order;
}

std::vector<std::vector<FrameIndex>> TripleSampler::epoch_batches(std::size_t epoch, std::size_t batch_size) const {
  if (batch_size == 0) throw ContractError("batch size must be positive");
  const auto order = epoch_order(epoch);
  std::vector<std::vector<FrameIndex>> out;
  for (std::size_t i = 0; i + batch_size <= order.size(); i += batch_size) {
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                     order.begin() + static_cast<std::ptrdiff_t>(i + batch_size));
  }
  return out;
}

diff::Tensor<float> frames_batch(const ObservationStore& store, std::span<const FrameIndex> frames) {
  if (frames.empty()) throw ContractError("frames_batch: no frames");
  const std::size_t C = store.channels, H = store.height, W = store.width;
  diff::Tensor<float> out({frames.size(), C, H, W});
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto img = frame_image(store, frames[i].episode, frames[i].t);
    std::copy(img.ptr(), img.ptr() + img.size(), out.ptr() + i * img.size());
  }
  return out;
}

TripleImages triple_images(const ObservationStore& store, std::span<const FrameIndex> centers) {
  std::vector<FrameIndex> prev, next;
  prev.reserve(centers.size());
  next.reserve(centers.size());
  for (const auto& c : centers) {
    if (c.t == 0 || c.t + 1 >= store.episodes.at(c.episode).n_frames) {
      throw ContractError("triple center at the edge of episode " + std::to_string(c.episode));
    }
    prev.push_back({c.episode, c.t - 1});
    next.push_back({c.episode, c.t + 1});
  }
  return {frames_batch(store, prev), frames_batch(store, centers), frames_batch(store, next)};
}

std::pair<LabeledFrames, LabeledFrames> probe_split(const ObservationStore& store, std::size_t train_n,
                                                    std::size_t test_n, Rng& rng) {
  if (!store.has_actions) throw ContractError("probe_split: store has no action labels");
  const std::size_t total = store.total_frames();
  if (train_n + test_n > total) {
    throw ContractError("probe_split: " + std::to_string(train_n + test_n) + " frames requested, store has " +
                        std::to_string(total));
  }
  std::vector<FrameIndex> all;
  all.reserve(total);
  for (std::size_t e = 0; e < store.episodes.size(); ++e) {
    for (std::size_t t = 0; t < store.episodes[e].n_frames; ++t) all.push_back({e, t});
  }
  rng.shuffle(all.begin(), all.end());
  LabeledFrames train, test;
  auto take = [&](LabeledFrames& dst, std::size_t from, std::size_t n) {
    dst.frames.assign(all.begin() + static_cast<std::ptrdiff_t>(from),
                      all.begin() + static_cast<std::ptrdiff_t>(from + n));
    for (const auto& f : dst.frames) dst.labels.push_back(store.action(f.episode, f.t));
  };
  take(train, 0, train_n);
  take(test, train_n, test_n);
  return {std::move(train), std::move(test)};
}

}  // namespace tovreg::data
