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
#include <span>
#include <vector>

#include "tovreg/data/store.hpp"
#include "tovreg/diff/tensor.hpp"
#include "tovreg/rng.hpp"

namespace tovreg::data {

// A frame position inside a store.
struct FrameIndex {
  std::size_t episode = 0;
  std::size_t t = 0;

  friend auto operator<=>(const FrameIndex&, const FrameIndex&) = default;
};

// Center frames t with 1 <= t <= len - 2, in episode order. Empty when no
// episode has three frames.
std::vector<FrameIndex> valid_centers(const ObservationStore& store);

// Uniform draws (with replacement) over valid centers. Throws ContractError
// if there is none.
std::vector<FrameIndex> sample_triples(const ObservationStore& store, std::size_t batch_size, Rng& rng);

// Epoch iteration: each valid center exactly once per epoch, in an order
// shuffled by substream(seed, epoch).
class TripleSampler {
 public:
  TripleSampler(const ObservationStore& store, std::uint64_t seed);

  std::size_t size() const { return centers_.size(); }
  std::vector<FrameIndex> epoch_order(std::size_t epoch) const;
  // Full batches of the epoch order; a trailing partial batch is dropped.
  std::vector<std::vector<FrameIndex>> epoch_batches(std::size_t epoch, std::size_t batch_size) const;

 private:
  std::vector<FrameIndex> centers_;
  std::uint64_t seed_;
};

// N x C x H x W float images of the given frames, scaled to [0, 1].
diff::Tensor<float> frames_batch(const ObservationStore& store, std::span<const FrameIndex> frames);

struct TripleImages {
  diff::Tensor<float> prev, current, next;  // N x C x H x W each
};

// Materializes frames (t - 1, t, t + 1) for each center.
TripleImages triple_images(const ObservationStore& store, std::span<const FrameIndex> centers);

struct LabeledFrames {
  std::vector<FrameIndex> frames;
  std::vector<int> labels;
};

// Disjoint random subsets of all frames with their action labels. Throws
// ContractError without actions or when train_n + test_n exceeds the frame
// count.
std::pair<LabeledFrames, LabeledFrames> probe_split(const ObservationStore& store, std::size_t train_n,
                                                    std::size_t test_n, Rng& rng);

}  // namespace tovreg::data
