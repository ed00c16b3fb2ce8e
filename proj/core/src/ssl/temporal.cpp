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

#include "tovreg/ssl/temporal.hpp"

#include <cmath>
#include <string>

#include "tovreg/errors.hpp"

namespace tovreg::ssl {

using diff::Shape;
using diff::Tensor;

template <typename T>
TemporalBatch<T> build_temporal_batch(const Var<T>& prev, const Var<T>& current, const Var<T>& next, Rng& rng) {
  std::vector<int> perms(prev.shape().empty() ? 0 : prev.shape()[0]);
  for (int& k : perms) k = static_cast<int>(rng.uniform_int(kPermutations.size()));
  return build_temporal_batch(prev, current, next, perms);
}

template <typename T>
TemporalBatch<T> build_temporal_batch(const Var<T>& prev, const Var<T>& current, const Var<T>& next,
                                      std::span<const int> permutations) {
  if (prev.shape().size() != 2 || prev.shape() != current.shape() || prev.shape() != next.shape()) {
    throw ShapeError("build_temporal_batch: representation shapes " + diff::shape_str(prev.shape()) + ", " +
                     diff::shape_str(current.shape()) + ", " + diff::shape_str(next.shape()) +
                     " must be equal N x D");
  }
  const std::size_t n = prev.shape()[0];
  if (permutations.size() != n) throw ContractError("build_temporal_batch: one permutation per row required");
  const std::array<const Var<T>*, 3> ordered = {&prev, &current, &next};

  TemporalBatch<T> out;
  std::vector<Var<T>> rows;
  rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int k = permutations[i];
    if (k < 0 || k >= static_cast<int>(kPermutations.size())) {
      throw ContractError("build_temporal_batch: permutation index " + std::to_string(k) + " out of range");
    }
    std::vector<Var<T>> slots;
    for (int pos : kPermutations[static_cast<std::size_t>(k)]) {
      slots.push_back(diff::slice(*ordered[static_cast<std::size_t>(pos)], 0, i, 1));
    }
    rows.push_back(diff::concat(slots, 1));
    out.permutations.push_back(k);
    out.labels.push_back(order_label(k));
  }
  out.features = diff::concat(rows, 0);
  return out;
}

template <typename T>
void add_temporal_head_params(ParamStore<T>& params, int embed_dim, std::uint64_t seed) {
  Rng rng(substream(seed, streams::kInit + 200));
  const std::size_t in = 3 * static_cast<std::size_t>(embed_dim);
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  Tensor<T> w(Shape{in, 1});
  for (T& v : w.data()) v = static_cast<T>(rng.uniform(-bound, bound));
  Tensor<T> b(Shape{1});
  b[0] = static_cast<T>(std::log(static_cast<double>(kPermutations.size() - 1)));
  params.add(std::string(kTemporalPrefix) + "weight", std::move(w));
  params.add(std::string(kTemporalPrefix) + "bias", std::move(b));
}

template <typename T>
Var<T> temporal_logits(const ParamStore<T>& params, const Var<T>& features) {
  const auto& w = params.get(std::string(kTemporalPrefix) + "weight");
  if (features.shape().size() != 2 || features.shape()[1] != w.shape()[0]) {
    throw ShapeError("temporal_logits: features " + diff::shape_str(features.shape()) + " vs head " +
                     diff::shape_str(w.shape()));
  }
  return diff::add(diff::matmul(features, w), params.get(std::string(kTemporalPrefix) + "bias"));
}

template TemporalBatch<float> build_temporal_batch(const Var<float>&, const Var<float>&, const Var<float>&, Rng&);
template TemporalBatch<double> build_temporal_batch(const Var<double>&, const Var<double>&, const Var<double>&, Rng&);
template TemporalBatch<float> build_temporal_batch(const Var<float>&, const Var<float>&, const Var<float>&,
                                                   std::span<const int>);
template TemporalBatch<double> build_temporal_batch(const Var<double>&, const Var<double>&, const Var<double>&,
                                                    std::span<const int>);
template void add_temporal_head_params(ParamStore<float>&, int, std::uint64_t);
template void add_temporal_head_params(ParamStore<double>&, int, std::uint64_t);
template Var<float> temporal_logits(const ParamStore<float>&, const Var<float>&);
template Var<double> temporal_logits(const ParamStore<double>&, const Var<double>&);

}  // namespace tovreg::ssl
