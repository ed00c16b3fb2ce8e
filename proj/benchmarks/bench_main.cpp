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


#include <benchmark/benchmark.h>

#include "tovreg/data/synthetic.hpp"
#include "tovreg/diff/ops.hpp"
#include "tovreg/rng.hpp"
#include "tovreg/ssl/trainer.hpp"
#include "tovreg/vit/encoder.hpp"

namespace {

using namespace tovreg;

diff::Tensor<float> random_tensor(diff::Shape shape, std::uint64_t seed) {
  diff::Tensor<float> t(std::move(shape));
  Rng rng(seed);
  for (auto& v : t.data()) v = static_cast<float>(rng.normal());
  return t;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = diff::Var<float>::constant(random_tensor({n, n}, 1));
  const auto b = diff::Var<float>::constant(random_tensor({n, n}, 2));
  for (auto _ : state) benchmark::DoNotOptimize(diff::matmul(a, b).value().ptr());
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(192)->Arg(512);

vit::ViTConfig small_vit() {
  vit::ViTConfig c;
  c.image_size = 32;
  c.patch_size = 8;
  c.embed_dim = 64;
  c.depth = 2;
  c.heads = 2;
  return c;
}

void BM_VitForward(benchmark::State& state) {
  const auto cfg = small_vit();
  const auto params = ssl::frozen(vit::init_params<float>(cfg, 1));
  const auto batch = static_cast<std::size_t>(state.range(0));
  const auto images = random_tensor({batch, 3, 32, 32}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(vit::forward(params, images, cfg).representation.value().ptr());
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch));
}
BENCHMARK(BM_VitForward)->Arg(1)->Arg(16);

void BM_DefaultVitForward(benchmark::State& state) {
  const vit::ViTConfig cfg;
  const auto params = ssl::frozen(vit::init_params<float>(cfg, 1));
  const auto images = random_tensor({1, 3, 84, 84}, 4);
  for (auto _ : state) benchmark::DoNotOptimize(vit::forward(params, images, cfg).representation.value().ptr());
}
BENCHMARK(BM_DefaultVitForward)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  const auto cfg = small_vit();
  ssl::SSLConfig s;
  s.expander = {64, 64, 64};
  s.batch_size = 16;
  data::SyntheticOptions o;
  o.episodes = 8;
  o.frames_per_episode = 6;
  o.image_size = 32;
  const auto store = data::generate_synthetic(o);
  auto params = ssl::init_model<float>(cfg, s, 1);
  ssl::SgdOptimizer<float> opt({s.momentum, s.weight_decay, s.lars});
  const auto centers = data::valid_centers(store);
  const std::vector<data::FrameIndex> batch(centers.begin(), centers.begin() + 16);
  const auto views = ssl::make_views(data::triple_images(store, batch), 32, 1, true);
  std::vector<int> perms(16);
  for (std::size_t i = 0; i < perms.size(); ++i) perms[i] = static_cast<int>(i % 6);
  for (auto _ : state) benchmark::DoNotOptimize(ssl::train_step(params, opt, views, perms, cfg, s, 1e-4).total);
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
