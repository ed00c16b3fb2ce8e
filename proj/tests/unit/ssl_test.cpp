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
#include <numbers>

#include "tovreg/data/synthetic.hpp"
#include "tovreg/diff/ops.hpp"
#include "tovreg/errors.hpp"
#include "tovreg/rng.hpp"
#include "tovreg/ssl/expander.hpp"
#include "tovreg/ssl/losses.hpp"
#include "tovreg/ssl/optimizer.hpp"
#include "tovreg/ssl/temporal.hpp"
#include "tovreg/ssl/trainer.hpp"

namespace tovreg::ssl {
namespace {

using diff::Shape;
using diff::Tensor;
using M = std::vector<std::vector<double>>;

Var<double> mat(const M& rows) {
  Tensor<double> t({rows.size(), rows[0].size()});
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[0].size(); ++j) t.at({i, j}) = rows[i][j];
  return Var<double>::constant(t);
}

M random_matrix(std::size_t n, std::size_t d, Rng& rng) {
  M m(n, std::vector<double>(d));
  for (auto& r : m)
    for (double& v : r) v = rng.normal();
  return m;
}

// ---- double-loop oracles ----

double inv_oracle(const M& a, const M& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[0].size(); ++j) s += (a[i][j] - b[i][j]) * (a[i][j] - b[i][j]);
  return s / static_cast<double>(a.size());
}

double column_cov(const M& z, std::size_t p, std::size_t q) {
  const double n = static_cast<double>(z.size());
  double mp = 0, mq = 0;
  for (const auto& r : z) {
    mp += r[p];
    mq += r[q];
  }
  mp /= n;
  mq /= n;
  double s = 0;
  for (const auto& r : z) s += (r[p] - mp) * (r[q] - mq);
  return s / (n - 1);
}

double var_oracle(const M& z, double gamma) {
  double s = 0;
  for (std::size_t j = 0; j < z[0].size(); ++j) s += std::max(0.0, gamma - std::sqrt(column_cov(z, j, j) + 1e-4));
  return s / static_cast<double>(z[0].size());
}

double cov_oracle(const M& z) {
  double s = 0;
  for (std::size_t p = 0; p < z[0].size(); ++p)
    for (std::size_t q = 0; q < z[0].size(); ++q)
      if (p != q) s += column_cov(z, p, q) * column_cov(z, p, q);
  return s / static_cast<double>(z[0].size());
}

double bce_oracle(double logit, int label) {
  const double p = 1.0 / (1.0 + std::exp(-logit));
  return -(label * std::log(p + 1e-12) + (1 - label) * std::log(1 - p + 1e-12));
}

// ---- fixtures ----

TEST(SslLosses, InvarianceFixtures) {
  EXPECT_NEAR(invariance_loss(mat({{1, 2}}), mat({{1, 4}})).value().item(), 4.0, 1e-9);
  EXPECT_EQ(invariance_loss(mat({{1, 2}, {3, 4}}), mat({{1, 2}, {3, 4}})).value().item(), 0.0);
  Rng rng(1);
  const auto a = random_matrix(6, 5, rng), b = random_matrix(6, 5, rng);
  const double base = invariance_loss(mat(a), mat(b)).value().item();
  EXPECT_NEAR(base, inv_oracle(a, b), 1e-12);
  EXPECT_NEAR(invariance_loss(diff::scale(mat(a), 2.0), diff::scale(mat(b), 2.0)).value().item(), 4 * base, 1e-9);
  EXPECT_THROW(invariance_loss(mat({{1, 2}}), mat({{1, 2, 3}})), ContractError);
}

TEST(SslLosses, VarianceFixtures) {
  EXPECT_NEAR(variance_loss(mat({{-1}, {1}}), 1.0).value().item(), 0.0, 1e-9);
  EXPECT_NEAR(variance_loss(mat({{3}, {3}, {3}}), 1.0).value().item(), 0.99, 1e-9);
  EXPECT_NEAR(variance_loss(mat({{0, 5}, {10, 5}}), 1.0).value().item(), 0.99 / 2, 1e-9);
  EXPECT_THROW(variance_loss(mat({{1, 2}}), 1.0), ContractError);
}

TEST(SslLosses, CovarianceFixtures) {
  EXPECT_NEAR(covariance_loss(mat({{1, 1}, {-1, -1}})).value().item(), 4.0, 1e-9);
  EXPECT_NEAR(covariance_loss(mat({{1, 0}, {2, 0}, {7, 0}})).value().item(), 0.0, 1e-12);
  EXPECT_EQ(covariance_loss(mat({{1}, {2}, {4}})).value().item(), 0.0);
  // centered columns orthogonal
  EXPECT_NEAR(covariance_loss(mat({{1, 1}, {1, -1}, {-1, 1}, {-1, -1}})).value().item(), 0.0, 1e-12);
  EXPECT_THROW(covariance_loss(mat({{1, 2}})), ContractError);
}

TEST(SslLosses, TemporalFixtures) {
  const std::vector<int> zero = {0}, one = {1};
  const auto l0 = Var<double>::constant(Tensor<double>::from({1}, {0.0}));
  EXPECT_NEAR(temporal_loss(l0, zero).value().item(), std::numbers::ln2, 1e-9);
  EXPECT_NEAR(temporal_loss(l0, one).value().item(), std::numbers::ln2, 1e-9);
  const auto l20 = Var<double>::constant(Tensor<double>::from({1, 1}, {20.0}));
  EXPECT_NEAR(temporal_loss(l20, one).value().item(), 2.06e-9, 1e-11);
  EXPECT_NEAR(temporal_loss(l20, one).value().item(), bce_oracle(20.0, 1), 1e-15);
  const std::vector<int> bad = {2};
  EXPECT_THROW(temporal_loss(l0, bad), ContractError);
}

TEST(SslLosses, AgreeWithOraclesOnRandomBatches) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng.uniform_int(8), d = 1 + rng.uniform_int(6);
    auto z = random_matrix(n, d, rng), zp = random_matrix(n, d, rng);
    for (auto& r : z)
      for (double& v : r) v *= rng.uniform(0.05, 2.0);
    EXPECT_NEAR(invariance_loss(mat(z), mat(zp)).value().item(), inv_oracle(z, zp), 1e-9);
    EXPECT_NEAR(variance_loss(mat(z), 1.0).value().item(), var_oracle(z, 1.0), 1e-9);
    EXPECT_NEAR(covariance_loss(mat(z)).value().item(), cov_oracle(z), 1e-9);

    std::vector<int> labels(n);
    Tensor<double> logits({n});
    double bce = 0;
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = static_cast<int>(rng.uniform_int(2));
      logits[i] = rng.uniform(-8, 8);
      bce += bce_oracle(logits[i], labels[i]);
    }
    EXPECT_NEAR(temporal_loss(Var<double>::constant(logits), labels).value().item(), bce / n, 1e-9);
  }
}

TEST(SslLosses, VarianceIgnoresRowTranslation) {
  Rng rng(3);
  auto z = random_matrix(5, 4, rng);
  const double before = variance_loss(mat(z), 1.0).value().item();
  for (auto& r : z)
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += 10.0 * static_cast<double>(j);
  EXPECT_NEAR(variance_loss(mat(z), 1.0).value().item(), before, 1e-9);
}

// ---- temporal batch ----

TEST(SslTemporal, PermutationTableAndLabels) {
  const auto prev = mat({{1, 2}}), cur = mat({{3, 4}}), next = mat({{5, 6}});
  const std::vector<int> k0 = {0}, k5 = {5};
  const auto b0 = build_temporal_batch(prev, cur, next, std::span<const int>(k0));
  EXPECT_EQ(b0.features.value(), Tensor<double>::from({1, 6}, {1, 2, 3, 4, 5, 6}));
  EXPECT_EQ(b0.labels, std::vector<int>{0});
  const auto b5 = build_temporal_batch(prev, cur, next, std::span<const int>(k5));
  EXPECT_EQ(b5.features.value(), Tensor<double>::from({1, 6}, {5, 6, 3, 4, 1, 2}));
  EXPECT_EQ(b5.labels, std::vector<int>{1});
  const std::vector<int> bad = {6};
  EXPECT_THROW(build_temporal_batch(prev, cur, next, std::span<const int>(bad)), ContractError);
}

TEST(SslTemporal, ShuffledFractionIsFiveSixths) {
  const std::size_t n = 60000;
  const auto z = Var<double>::constant(Tensor<double>({n, 1}));
  Rng rng(4);
  const auto b = build_temporal_batch(z, z, z, rng);
  double ones = 0;
  for (int l : b.labels) ones += l;
  EXPECT_NEAR(ones / n, 5.0 / 6.0, 0.01);
}

TEST(SslTemporal, HeadStartsAtLabelPrior) {
  diff::ParamStore<double> p;
  add_temporal_head_params(p, 8, 1);
  EXPECT_NEAR(p.value("temporal_head.bias")[0], std::log(5.0), 1e-15);
  EXPECT_EQ(p.value("temporal_head.weight").shape(), (Shape{24, 1}));
  // zero features: BCE equals the entropy of the 1/6 : 5/6 prior on a batch with that mix
  std::vector<int> labels = {0, 1, 1, 1, 1, 1};
  const auto logits = temporal_logits(p, Var<double>::constant(Tensor<double>({6, 24})));
  const double prior = -(std::log(1.0 / 6.0) + 5 * std::log(5.0 / 6.0)) / 6.0;
  EXPECT_NEAR(temporal_loss(logits, labels).value().item(), prior, 1e-9);
  EXPECT_NEAR(prior, 0.4506, 1e-4);
}

// ---- expander ----

TEST(SslExpander, TrainingModeNormalizesColumns) {
  diff::ParamStore<double> p;
  add_expander_params(p, 4, {8, 8, 6}, 1);
  EXPECT_EQ(expander_depth(p), 3);
  EXPECT_FALSE(p.contains("expander.fc2.bias"));
  Rng rng(5);
  Tensor<double> y({10, 4});
  for (double& v : y.data()) v = rng.normal() * 3 + 1;
  const auto z = expander_forward(p, Var<double>::constant(y), true);
  EXPECT_EQ(z.shape(), (Shape{10, 6}));
  EXPECT_THROW(expander_forward(p, Var<double>::constant(Tensor<double>({1, 4})), true), ContractError);
  // running statistics moved off their init
  EXPECT_NE(p.value("expander.bn0.running_mean")[0], 0.0);
}

TEST(SslExpander, EvalModeWithZeroWeightsGivesZero) {
  diff::ParamStore<double> p;
  add_expander_params(p, 3, {5, 4}, 1);
  for (auto& e : p.entries())
    if (e.name.find("fc") != std::string::npos) e.var.mutable_value().fill(0.0);
  const auto z = expander_forward(p, Var<double>::constant(Tensor<double>({2, 3}, 1.0)), false);
  for (double v : z.value().data()) EXPECT_EQ(v, 0.0);
}

// ---- optimizer and schedule ----

TEST(SslOptimizer, MomentumAndWeightDecayByHand) {
  diff::ParamStore<double> p;
  p.add("w", Tensor<double>::from({1, 2}, {1.0, -2.0}));
  p.add("b", Tensor<double>::from({2}, {0.5, 0.5}));
  SgdOptimizer<double> opt({0.9, 0.1, false, 0.001});
  for (int step = 0; step < 2; ++step) {
    p.zero_grad();
    diff::backward(diff::add(diff::sum(p.get("w")), diff::sum(p.get("b"))));
    opt.step(p, 0.5);
  }
  // w: g1 = 1 + 0.1*w0; buf1 = g1; w1 = w0 - 0.5 g1; g2 = 1 + 0.1*w1; buf2 = 0.9 g1 + g2
  const double w0 = 1.0, g1 = 1 + 0.1 * w0, w1 = w0 - 0.5 * g1, g2 = 1 + 0.1 * w1;
  EXPECT_NEAR(p.value("w")[0], w1 - 0.5 * (0.9 * g1 + g2), 1e-15);
  // rank-1: no decay
  EXPECT_NEAR(p.value("b")[0], 0.5 - 0.5 * 1 - 0.5 * (0.9 + 1), 1e-15);
}

TEST(SslOptimizer, LarsTrustRatio) {
  diff::ParamStore<double> p;
  auto& w = p.add("w", Tensor<double>::from({1, 2}, {3.0, 4.0}));
  SgdOptimizer<double> opt({0.0, 0.0, true, 0.01});
  diff::backward(diff::scale(diff::sum(w), 10.0));  // grad (10, 10), norm 10 sqrt2
  opt.step(p, 1.0);
  const double scale = 0.01 * 5.0 / (10.0 * std::sqrt(2.0));
  EXPECT_NEAR(w.value()[0], 3.0 - 10 * scale, 1e-15);
  EXPECT_NEAR(w.value()[1], 4.0 - 10 * scale, 1e-15);
}

TEST(SslSchedule, WarmupThenCosine) {
  EXPECT_NEAR(scheduled_lr(0, 100, 10, 1.0), 0.1, 1e-15);
  EXPECT_NEAR(scheduled_lr(4, 100, 10, 1.0), 0.5, 1e-15);
  EXPECT_NEAR(scheduled_lr(9, 100, 10, 1.0), 1.0, 1e-15);
  EXPECT_NEAR(scheduled_lr(10, 100, 10, 1.0), 1.0, 1e-15);
  EXPECT_NEAR(scheduled_lr(55, 100, 10, 1.0), 0.5 * (1.0 + 1e-6), 1e-12);
  EXPECT_NEAR(scheduled_lr(100, 100, 10, 1.0), 1e-6, 1e-15);
}

TEST(SslConfig, LrScalingAndValidation) {
  SSLConfig c;
  c.batch_size = 128;
  EXPECT_NEAR(c.lr(), 0.3, 1e-15);
  c.var_coef = -1;
  EXPECT_THROW(c.validate(), ConfigError);
  c = SSLConfig{};
  c.gamma = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

// ---- full objective ----

vit::ViTConfig tiny_vit() {
  vit::ViTConfig v;
  v.image_size = 8;
  v.patch_size = 4;
  v.embed_dim = 8;
  v.depth = 1;
  v.heads = 2;
  return v;
}

SSLConfig tiny_ssl() {
  SSLConfig s;
  s.expander = {16, 16};
  s.batch_size = 4;
  s.epochs = 2;
  s.warmup_epochs = 1;
  return s;
}

data::ObservationStore tiny_store(int episodes = 2, int frames = 6) {
  data::SyntheticOptions o;
  o.episodes = episodes;
  o.frames_per_episode = frames;
  o.image_size = 8;
  o.seed = 3;
  return data::generate_synthetic(o);
}

TEST(SslObjective, TotalIsTheWeightedSumAndIdentityViewsHaveNoInvariance) {
  const auto v = tiny_vit();
  auto s = tiny_ssl();
  const auto store = tiny_store();
  const auto centers = data::valid_centers(store);
  const auto triples = data::triple_images(store, std::span(centers).subspan(0, 4));
  const auto views = cast_views<double>(make_views(triples, 8, 1, false));
  auto params = init_model<double>(v, s, 2);
  const std::vector<int> perms = {0, 1, 5, 3};
  auto terms = tov_vicreg_loss(params, views, perms, v, s);
  const auto r = terms.report(s);
  EXPECT_EQ(r.total, s.inv_coef * r.inv + s.var_coef * r.var + s.cov_coef * r.cov + s.temp_coef * r.temp);
  EXPECT_NEAR(r.inv, 0.0, 1e-20);
  EXPECT_GE(r.var, 0.0);
  EXPECT_GE(r.cov, 0.0);
  EXPECT_EQ(terms.labels, (std::vector<int>{0, 1, 1, 1}));

  s.var_coef = s.cov_coef = s.temp_coef = 0.0;
  params.zero_grad();
  auto only_inv = tov_vicreg_loss(params, views, perms, v, s);
  diff::backward(only_inv.total);
  for (const auto& e : params.entries()) {
    const auto grad = e.var.grad();
    for (double g : grad.data()) EXPECT_NEAR(g, 0.0, 1e-9) << e.name;
  }
}

TEST(SslObjective, GradientsOnSampledEntries) {
  auto v = tiny_vit();
  diff::GradCheckOptions o;
  o.max_entries_per_param = 4;
  const auto report = check_objective_gradients(v, tiny_ssl(), 3, 5, o);
  EXPECT_TRUE(report.passed) << report.max_rel_err;
  std::size_t trainable = 0;
  const auto model = init_model<double>(v, tiny_ssl(), 5);
  for (const auto& e : model.entries()) trainable += e.trainable ? 1 : 0;
  EXPECT_EQ(report.params.size(), trainable);
}

TEST(SslPretrain, LogBookkeepingAndDeterminism) {
  const auto v = tiny_vit();
  const auto s = tiny_ssl();
  const auto store = tiny_store(3, 6);  // 12 centers -> 3 batches of 4
  const auto a = pretrain(store, v, s, 7);
  EXPECT_EQ(a.steps_per_epoch, 3u);
  ASSERT_EQ(a.log.size(), 6u);
  EXPECT_EQ(a.log.back().epoch, 2);
  EXPECT_EQ(a.log.back().step, 6u);
  const auto b = pretrain(store, v, s, 7);
  EXPECT_EQ(a.params.fingerprint(), b.params.fingerprint());
  for (std::size_t i = 0; i < a.log.size(); ++i) EXPECT_EQ(loss_log_line(a.log[i]), loss_log_line(b.log[i]));
  const auto c = pretrain(store, v, s, 8);
  EXPECT_NE(a.params.fingerprint(), c.params.fingerprint());
}

TEST(SslPretrain, EmptyStoreRejected) {
  data::ObservationStore empty;
  empty.height = empty.width = 8;
  EXPECT_THROW(pretrain(empty, tiny_vit(), tiny_ssl(), 1), ContractError);
}

TEST(SslModel, SidecarRoundTrip) {
  ModelInfo info;
  info.vit = tiny_vit();
  info.ssl = tiny_ssl();
  info.epoch = 3;
  info.seed = 42;
  const auto back = parse_sidecar(sidecar_json(info));
  EXPECT_EQ(back.vit, info.vit);
  EXPECT_EQ(back.ssl, info.ssl);
  EXPECT_EQ(back.epoch, 3);
  EXPECT_EQ(back.seed, 42u);
  EXPECT_THROW(parse_sidecar("{\"vit\": {\"depth\": \"x\"}}"), ConfigError);
}

}  // namespace
}  // namespace tovreg::ssl
