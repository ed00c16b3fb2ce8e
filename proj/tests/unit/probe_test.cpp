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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "tovreg/data/synthetic.hpp"
#include "tovreg/errors.hpp"
#include "tovreg/probe/f1.hpp"
#include "tovreg/probe/probe.hpp"
#include "tovreg/rng.hpp"
#include "tovreg/vit/encoder.hpp"

namespace tovreg::probe {
namespace {

// Counting oracle, one pass per class.
double oracle_macro(const std::vector<int>& p, const std::vector<int>& y, int k) {
  double sum = 0;
  int present = 0;
  for (int c = 0; c < k; ++c) {
    int tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p[i] == c && y[i] == c) ++tp;
      if (p[i] == c && y[i] != c) ++fp;
      if (p[i] != c && y[i] == c) ++fn;
    }
    if (tp + fp + fn == 0) continue;
    ++present;
    sum += 2.0 * tp / (2.0 * tp + fp + fn);
  }
  return sum / present;
}

double oracle_weighted(const std::vector<int>& p, const std::vector<int>& y, int k) {
  double sum = 0;
  for (int c = 0; c < k; ++c) {
    int tp = 0, fp = 0, fn = 0, support = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      support += y[i] == c;
      if (p[i] == c && y[i] == c) ++tp;
      if (p[i] == c && y[i] != c) ++fp;
      if (p[i] != c && y[i] == c) ++fn;
    }
    if (tp == 0) continue;
    sum += support * 2.0 * tp / (2.0 * tp + fp + fn);
  }
  return sum / static_cast<double>(y.size());
}

TEST(ProbeF1, MatchesCountingOracle) {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 2 + trial % 6;
    const std::size_t n = 1 + rng.uniform_int(60);
    std::vector<int> p(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(k)));
      p[i] = rng.bernoulli(0.5) ? y[i] : static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(k)));
    }
    const auto r = evaluate_f1(p, y, k);
    EXPECT_NEAR(r.macro, oracle_macro(p, y, k), 1e-12);
    EXPECT_NEAR(r.weighted, oracle_weighted(p, y, k), 1e-12);
  }
}

TEST(ProbeF1, Examples) {
  const std::vector<int> y = {0, 0, 1, 1}, p = {0, 1, 1, 1};
  const auto r = evaluate_f1(p, y, 2);
  EXPECT_DOUBLE_EQ(r.precision[0], 1.0);
  EXPECT_DOUBLE_EQ(r.recall[0], 0.5);
  EXPECT_DOUBLE_EQ(r.f1[1], 0.8);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.75);
  EXPECT_EQ(r.support, (std::vector<std::size_t>{2, 2}));
  // Class 2 appears nowhere and does not dilute the macro mean.
  EXPECT_DOUBLE_EQ(evaluate_f1(p, y, 3).macro, r.macro);
  const std::vector<int> never = {0, 0, 0, 0};
  EXPECT_EQ(evaluate_f1(never, y, 2).f1[1], 0.0);
  EXPECT_THROW(evaluate_f1(std::vector<int>{}, std::vector<int>{}, 2), ContractError);
  EXPECT_THROW(evaluate_f1(p, std::vector<int>{0}, 2), ContractError);
  EXPECT_THROW(evaluate_f1(std::vector<int>{0, 0, 2, 1}, y, 2), ContractError);
  EXPECT_EQ(parse_f1_average("weighted"), F1Average::kWeighted);
  EXPECT_THROW(parse_f1_average("micro"), ConfigError);
}

TEST(ProbeF1, RandomPredictorNearChance) {
  Rng rng(2);
  for (int k : {2, 4, 18}) {
    const std::size_t n = 200000;
    std::vector<int> p(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(k)));
      p[i] = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(k)));
    }
    EXPECT_NEAR(evaluate_f1(p, y, k).macro, 1.0 / k, 0.03) << k;
  }
}

Tensor<double> clusters(Rng& rng, std::size_t n, int k, int d, std::vector<int>& labels) {
  Tensor<double> x({n, static_cast<std::size_t>(d)});
  labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = static_cast<int>(i % k);
    for (int j = 0; j < d; ++j) x[i * d + j] = rng.normal() * 0.5 + (j == labels[i] ? 4.0 : 0.0);
  }
  return x;
}

TEST(ProbeLinear, SeparableFeaturesReachHighF1) {
  Rng rng(3);
  std::vector<int> ytr, yte;
  const auto xtr = clusters(rng, 400, 4, 8, ytr);
  const auto xte = clusters(rng, 200, 4, 8, yte);
  ProbeConfig cfg;
  cfg.epochs = 50;
  cfg.batch_size = 32;
  cfg.lr = 1e-2;
  const auto t = train_linear_probe(xtr, ytr, cfg);
  EXPECT_EQ(t.probe.n_classes(), 4);
  EXPECT_EQ(t.loss_curve.size(), 50u);
  EXPECT_LT(t.loss_curve.back(), t.loss_curve.front());
  EXPECT_GE(evaluate_f1(t.probe.predict(xte), yte, 4).macro, 0.95);
  const auto again = train_linear_probe(xtr, ytr, cfg);
  EXPECT_EQ(again.loss_curve, t.loss_curve);
  std::vector<int> bad = ytr;
  bad[0] = 9;
  cfg.n_actions = 4;
  EXPECT_THROW(train_linear_probe(xtr, bad, cfg), ContractError);
}

TEST(ProbeLinear, ZeroWeightsPredictLowestIndex) {
  LinearProbe p;
  p.weight = Tensor<double>({2, 3});
  p.bias = Tensor<double>({3});
  const auto pred = p.predict(Tensor<double>::from({2, 2}, {1, 2, 3, 4}));
  EXPECT_EQ(pred, (std::vector<int>{0, 0}));
  EXPECT_EQ(infer_classes(std::vector<int>{0, 0}, 0), 2);
  EXPECT_EQ(infer_classes(std::vector<int>{0, 5}, 0), 6);
  EXPECT_EQ(infer_classes(std::vector<int>{0, 1}, 4), 4);
}

struct ProbeFixture : ::testing::Test {
  vit::ViTConfig vit;
  data::ObservationStore store;
  data::LabeledFrames train;

  void SetUp() override {
    vit.image_size = 16;
    vit.patch_size = 4;
    vit.embed_dim = 16;
    vit.depth = 1;
    vit.heads = 2;
    data::SyntheticOptions o;
    o.episodes = 3;
    o.frames_per_episode = 8;
    o.image_size = 16;
    store = data::generate_synthetic(o);
    Rng rng(4);
    train = data::probe_split(store, 16, 4, rng).first;
  }
};

TEST_F(ProbeFixture, FrozenEncoderUnchanged) {
  const auto encoder = vit::init_params<float>(vit, 7);
  ProbeConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 8;
  cfg.n_actions = 4;
  const auto run = train_probe(encoder, vit, store, train, cfg);
  EXPECT_EQ(run.encoder_hash_before, run.encoder_hash_after);
  EXPECT_EQ(run.encoder_hash_before, encoder.fingerprint());
  EXPECT_EQ(run.encoder.fingerprint(), encoder.fingerprint());
  EXPECT_EQ(run.training.probe.n_classes(), 4);
}

TEST_F(ProbeFixture, UnfrozenEncoderMoves) {
  const auto encoder = vit::init_params<float>(vit, 7);
  ProbeConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 8;
  cfg.freeze_encoder = false;
  const auto run = train_probe(encoder, vit, store, train, cfg);
  EXPECT_EQ(run.encoder_hash_before, encoder.fingerprint());
  EXPECT_NE(run.encoder_hash_after, run.encoder_hash_before);
}

TEST(ProbeTable, MeansAndPearson) {
  std::vector<ProbeRow> rows;
  const double f[3][2] = {{0.2, 0.4}, {0.5, 0.5}, {0.9, 0.7}};
  for (int c = 0; c < 3; ++c)
    for (int s = 0; s < 2; ++s) {
      rows.push_back({"s" + std::to_string(s), "ck" + std::to_string(c), c + 1, "test", f[c][s], 0.0, 0.0});
      rows.push_back({"s" + std::to_string(s), "ck" + std::to_string(c), c + 1, "train", 1.0, 1.0, 1.0});
    }
  const auto means = checkpoint_f1_means(rows, F1Average::kMacro);
  ASSERT_EQ(means.size(), 3u);
  EXPECT_DOUBLE_EQ(means[0], 0.3);
  EXPECT_DOUBLE_EQ(means[2], 0.8);
  const std::vector<double> scores = {3.0, 5.0, 8.0};
  EXPECT_NEAR(probe_pearson(rows, scores, F1Average::kMacro), 1.0, 1e-12);
  EXPECT_THROW(probe_pearson(rows, std::vector<double>{1, 2}, F1Average::kMacro), ContractError);

  const auto dir = std::filesystem::temp_directory_path();
  const auto csv = dir / "tovreg_probe_scores.csv";
  {
    std::ofstream out(csv);
    out << "checkpoint,score\nck0,1.5\nck1,-2\n";
  }
  EXPECT_EQ(read_score_csv(csv), (std::vector<double>{1.5, -2.0}));
  const auto table = dir / "tovreg_probe_rows.csv";
  write_probe_results(table, rows);
  std::ifstream in(table);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, kProbeHeader);
  std::filesystem::remove(csv);
  std::filesystem::remove(table);
}

TEST(ProbeCache, RoundTrip) {
  Rng rng(5);
  Tensor<float> x({7, 3});
  for (auto& v : x.data()) v = static_cast<float>(rng.normal());
  const auto path = std::filesystem::temp_directory_path() / "tovreg_probe_cache.bin";
  write_feature_cache(path, x);
  EXPECT_EQ(std::filesystem::file_size(path), 8u + 7u * 3u * 4u);
  const auto back = read_feature_cache(path);
  EXPECT_EQ(back.shape(), x.shape());
  EXPECT_TRUE(std::ranges::equal(back.data(), x.data()));
  std::filesystem::resize_file(path, 20);
  EXPECT_THROW(read_feature_cache(path), FormatError);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace tovreg::probe
