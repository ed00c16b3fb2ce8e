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


#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "tovreg/diff/grad_check.hpp"
#include "tovreg/diff/ops.hpp"
#include "tovreg/errors.hpp"
#include "tovreg/rng.hpp"
#include "tovreg/vit/encoder.hpp"

namespace tovreg::vit {
namespace {

// Hand count: patch embedding, CLS, table, per block two LNs, qkv, proj,
// two MLP linears, final LN.
std::size_t closed_form_count(std::size_t C, std::size_t p, std::size_t D, std::size_t depth, std::size_t ratio,
                              std::size_t table) {
  const std::size_t H = D * ratio;
  const std::size_t block = 4 * D + (D * 3 * D + 3 * D) + (D * D + D) + (D * H + H) + (H * D + D);
  return (C * p * p * D + D) + D + table * D + depth * block + 2 * D;
}

ViTConfig small(int image = 16, int patch = 4, int dim = 16, int depth = 2, int heads = 2) {
  ViTConfig c;
  c.image_size = image;
  c.patch_size = patch;
  c.embed_dim = dim;
  c.depth = depth;
  c.heads = heads;
  return c;
}

TEST(VitParamCount, DefaultConfigBothTables) {
  ViTConfig c;
  c.pos_table_tokens = 785;
  EXPECT_EQ(param_count(c), 5526720u);
  c.pos_table_tokens = 0;
  EXPECT_EQ(param_count(c), 5395392u);
  EXPECT_EQ(param_count(c), closed_form_count(3, 8, 192, 12, 4, 101));
}

TEST(VitParamCount, MatchesEnumeratedStore) {
  for (int patch : {4, 8, 16}) {
    for (int table : {0, 785}) {
      ViTConfig c;
      c.patch_size = patch;
      c.pos_table_tokens = table;
      c.depth = 2;
      const auto p = init_params<float>(c, 1);
      EXPECT_EQ(p.trainable_count(), param_count(c)) << "patch " << patch << " table " << table;
      EXPECT_EQ(param_count(c), closed_form_count(3, patch, 192, 2, 4, c.pos_tokens()));
    }
  }
}

TEST(VitConfig, ValidateRejectsBadShapes) {
  ViTConfig c;
  c.heads = 5;  // 192 not divisible
  EXPECT_THROW(c.validate(), ConfigError);
  c = ViTConfig{};
  c.pos_table_tokens = 51;  // not k*k + 1
  EXPECT_THROW(c.validate(), ConfigError);
  c = ViTConfig{};
  c.patch_size = 100;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(VitPatchify, RowMajorGridAndChannelMajorRows) {
  Tensor<float> img({2, 5, 5});
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = static_cast<float>(i);
  const auto p = patchify(img, 2);  // 2x2 grid, trailing row/col dropped
  ASSERT_EQ(p.shape(), (diff::Shape{4, 8}));
  // patch (0, 1): rows 0-1, cols 2-3; channel 0 first
  EXPECT_EQ(p.at({1, 0}), img.at({0, 0, 2}));
  EXPECT_EQ(p.at({1, 3}), img.at({0, 1, 3}));
  EXPECT_EQ(p.at({1, 4}), img.at({1, 0, 2}));
  EXPECT_EQ(p.at({2, 0}), img.at({0, 2, 0}));
  EXPECT_THROW(patchify(img, 6), ConfigError);
}

Tensor<double> random_images(std::size_t n, const ViTConfig& c, std::uint64_t seed) {
  Rng rng(seed);
  Tensor<double> t({n, static_cast<std::size_t>(c.in_channels), static_cast<std::size_t>(c.image_size),
                    static_cast<std::size_t>(c.image_size)});
  for (double& v : t.data()) v = rng.uniform();
  return t;
}

// Random values for every parameter so that zero-init tables do not hide
// wiring mistakes.
void randomize(ParamStore<double>& p, std::uint64_t seed) {
  Rng rng(seed);
  for (auto& e : p.entries())
    for (double& v : e.var.mutable_value().data()) v += 0.1 * rng.normal();
}

TEST(VitForward, ShapesAndCapture) {
  const auto c = small();
  const auto p = init_params<double>(c, 3);
  const auto out = forward(p, random_images(3, c, 1), c, true);
  EXPECT_EQ(out.representation.shape(), (diff::Shape{3, 16}));
  ASSERT_EQ(out.mlp_activations.size(), 2u);
  EXPECT_EQ(out.mlp_activations[0].shape(), (diff::Shape{3, 17, 64}));
  EXPECT_EQ(out.attention.shape(), (diff::Shape{3, 2, 17, 17}));
  for (std::size_t r = 0; r < 3 * 2 * 17; ++r) {
    double s = 0;
    for (std::size_t j = 0; j < 17; ++j) s += out.attention[r * 17 + j];
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
  const auto maps = attention_maps(out, c, 1);
  ASSERT_EQ(maps.size(), 2u);
  EXPECT_EQ(maps[0].shape(), (diff::Shape{4, 4}));
  EXPECT_NEAR(std::accumulate(maps[1].data().begin(), maps[1].data().end(), 0.0), 1.0, 1e-12);
}

TEST(VitForward, BatchItemsAreIndependent) {
  const auto c = small();
  auto p = init_params<double>(c, 4);
  randomize(p, 5);
  const auto imgs = random_images(3, c, 2);
  const auto all = forward(p, imgs, c).representation.value();
  const std::size_t n = imgs.size() / 3;
  for (std::size_t i = 0; i < 3; ++i) {
    Tensor<double> one({3, 16, 16}, std::vector<double>(imgs.ptr() + i * n, imgs.ptr() + (i + 1) * n));
    const auto y = forward(p, one, c).representation.value();
    for (std::size_t j = 0; j < 16; ++j) EXPECT_NEAR(y[j], all[i * 16 + j], 1e-12);
  }
}

// With a constant positional table the CLS output cannot see where a patch
// sits: swapping two patches leaves it unchanged.
TEST(VitForward, PatchPermutationInvariantWithoutPositions) {
  const auto c = small();
  auto p = init_params<double>(c, 6);
  randomize(p, 7);
  auto& pos = p.get("encoder.pos_embed").mutable_value();
  const std::size_t D = 16;
  for (std::size_t t = 1; t < pos.size() / D; ++t)
    for (std::size_t j = 0; j < D; ++j) pos[t * D + j] = pos[D + j];
  auto img = random_images(1, c, 8);
  const auto y0 = forward(p, img, c).representation.value();
  // swap patch (0,0) with patch (2,3)
  for (std::size_t ch = 0; ch < 3; ++ch)
    for (std::size_t r = 0; r < 4; ++r)
      for (std::size_t q = 0; q < 4; ++q) std::swap(img.at({0, ch, r, q}), img.at({0, ch, 8 + r, 12 + q}));
  const auto y1 = forward(p, img, c).representation.value();
  double diff = 0;
  for (std::size_t j = 0; j < D; ++j) diff = std::max(diff, std::abs(y0[j] - y1[j]));
  EXPECT_LT(diff, 1e-12);
}

TEST(VitForward, PositionsBreakPermutationInvariance) {
  const auto c = small();
  auto p = init_params<double>(c, 6);
  randomize(p, 7);
  auto img = random_images(1, c, 8);
  const auto y0 = forward(p, img, c).representation.value();
  for (std::size_t ch = 0; ch < 3; ++ch)
    for (std::size_t r = 0; r < 4; ++r)
      for (std::size_t q = 0; q < 4; ++q) std::swap(img.at({0, ch, r, q}), img.at({0, ch, 8 + r, 12 + q}));
  const auto y1 = forward(p, img, c).representation.value();
  double diff = 0;
  for (std::size_t j = 0; j < 16; ++j) diff = std::max(diff, std::abs(y0[j] - y1[j]));
  EXPECT_GT(diff, 1e-6);
}

TEST(VitForward, ResampledTableRunsOnSmallerGrid) {
  auto c = small(16, 4, 16, 1, 2);
  c.pos_table_tokens = 785;
  const auto p = init_params<float>(c, 1);
  EXPECT_EQ(p.value("encoder.pos_embed").size(), 785u * 16u);
  const auto out = forward(p, random_images(2, c, 3).cast<float>(), c);
  EXPECT_EQ(out.representation.shape(), (diff::Shape{2, 16}));
}

TEST(VitForward, MissingOrMisshapenParamsRejected) {
  const auto c = small();
  auto p = init_params<float>(c, 1);
  auto wrong = small(16, 4, 32, 2, 2);
  EXPECT_THROW(check_params(p, wrong), ContractError);
  EXPECT_THROW(forward(p, random_images(1, wrong, 1).cast<float>(), wrong), ContractError);
}

TEST(VitResample, IdentityAndRowSums) {
  const auto same = grid_resample_matrix<double>(3, 3);
  for (std::size_t i = 0; i < 9; ++i)
    for (std::size_t j = 0; j < 9; ++j) EXPECT_NEAR(same.at({i, j}), i == j ? 1.0 : 0.0, 1e-15);
  const auto down = grid_resample_matrix<double>(28, 10);
  ASSERT_EQ(down.shape(), (diff::Shape{100, 784}));
  for (std::size_t i = 0; i < 100; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < 784; ++j) s += down.at({i, j});
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(VitInit, DistributionsFollowDefaults) {
  ViTConfig c;
  c.depth = 1;
  const auto p = init_params<double>(c, 9);
  for (double v : p.value("encoder.pos_embed").data()) EXPECT_EQ(v, 0.0);
  for (double v : p.value("encoder.cls_token").data()) EXPECT_EQ(v, 0.0);
  double sq = 0, mx = 0;
  const auto& w = p.value("encoder.patch_embed.weight");
  for (double v : w.data()) {
    sq += v * v;
    mx = std::max(mx, std::abs(v));
  }
  EXPECT_LE(mx, 0.04 + 1e-12);
  EXPECT_NEAR(std::sqrt(sq / static_cast<double>(w.size())), 0.02 * 0.8796, 0.001);  // truncated at 2 sigma
}

TEST(VitGrad, EncoderMatchesCentralDifferences) {
  const auto c = small(8, 4, 8, 1, 2);
  auto p = init_params<double>(c, 10);
  randomize(p, 11);
  const auto imgs = random_images(2, c, 12);
  Rng rng(13);
  Tensor<double> w({2, 8});
  for (double& v : w.data()) v = rng.uniform(-1, 1);
  diff::GradCheckOptions o;
  o.max_entries_per_param = 12;
  const auto report = diff::grad_check(
      p, [&](ParamStore<double>& s) {
        return diff::sum(diff::mul(forward(s, imgs, c).representation, Var<double>::constant(w)));
      },
      o);
  EXPECT_TRUE(report.passed) << report.max_rel_err;
}

}  // namespace
}  // namespace tovreg::vit
