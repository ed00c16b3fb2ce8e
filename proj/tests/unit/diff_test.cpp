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
#include <functional>
#include <optional>
#include <vector>

#include "tovreg/diff/grad_check.hpp"
#include "tovreg/diff/ops.hpp"
#include "tovreg/diff/param_store.hpp"
#include "tovreg/errors.hpp"
#include "tovreg/rng.hpp"

namespace tovreg::diff {
namespace {

using D = double;

Tensor<D> random_tensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<D> t(shape);
  for (D& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

// Contracts f(params) against a fixed random weight so every output entry
// carries a distinct upstream gradient.
GradCheckReport check_op(ParamStore<D>& params, const std::function<Var<D>(ParamStore<D>&)>& f,
                         std::uint64_t seed = 3) {
  Rng rng(seed);
  std::optional<Tensor<D>> weight;
  auto model = [&](ParamStore<D>& p) {
    Var<D> out = f(p);
    if (!weight) weight = random_tensor(out.shape(), rng);
    return sum(mul(out, Var<D>::constant(*weight)));
  };
  GradCheckOptions o;
  o.eps = 1e-6;
  o.tol = 1e-6;
  return grad_check(params, model, o);
}

struct UnaryCase {
  const char* name;
  std::function<Var<D>(const Var<D>&)> op;
  double lo, hi;
};

TEST(DiffGrad, UnaryOpsMatchCentralDifferences) {
  const std::vector<UnaryCase> cases = {
      {"square", [](const Var<D>& x) { return square(x); }, -2, 2},
      {"sqrt", [](const Var<D>& x) { return sqrt(x); }, 0.5, 3},
      {"log", [](const Var<D>& x) { return log(x); }, 0.5, 3},
      {"relu", [](const Var<D>& x) { return relu(x); }, 0.1, 2},
      {"gelu", [](const Var<D>& x) { return gelu(x); }, -3, 3},
      {"sigmoid", [](const Var<D>& x) { return sigmoid(x); }, -4, 4},
      {"softmax", [](const Var<D>& x) { return softmax(x); }, -2, 2},
      {"scale", [](const Var<D>& x) { return scale(x, 2.5); }, -1, 1},
      {"add_scalar", [](const Var<D>& x) { return add_scalar(x, 0.75); }, -1, 1},
      {"transpose", [](const Var<D>& x) { return transpose(x); }, -1, 1},
      {"permute", [](const Var<D>& x) { return permute(x, {1, 0, 2}); }, -1, 1},
      {"reshape", [](const Var<D>& x) { return reshape(x, Shape{6, 4}); }, -1, 1},
      {"slice", [](const Var<D>& x) { return slice(x, 2, 1, 2); }, -1, 1},
      {"sum_axis", [](const Var<D>& x) { return sum(x, 1); }, -1, 1},
      {"mean_axis", [](const Var<D>& x) { return mean(x, 2, true); }, -1, 1},
      {"mean", [](const Var<D>& x) { return mean(x); }, -1, 1},
      {"variance", [](const Var<D>& x) { return variance(x, 0); }, -1, 1},
      {"variance_biased", [](const Var<D>& x) { return variance(x, 2, false, true); }, -1, 1},
  };
  for (const auto& c : cases) {
    Rng rng(11);
    ParamStore<D> p;
    p.add("x", random_tensor({2, 3, 4}, rng, c.lo, c.hi));
    const auto report = check_op(p, [&](ParamStore<D>& s) { return c.op(s.get("x")); });
    EXPECT_TRUE(report.passed) << c.name << " max rel err " << report.max_rel_err;
  }
}

TEST(DiffGrad, BinaryOpsWithBroadcasting) {
  using Bin = std::function<Var<D>(const Var<D>&, const Var<D>&)>;
  const std::vector<std::pair<const char*, Bin>> cases = {
      {"add", [](auto& a, auto& b) { return add(a, b); }},
      {"sub", [](auto& a, auto& b) { return sub(a, b); }},
      {"mul", [](auto& a, auto& b) { return mul(a, b); }},
      {"div", [](auto& a, auto& b) { return div(a, b); }},
  };
  for (const auto& [name, op] : cases) {
    Rng rng(5);
    ParamStore<D> p;
    p.add("a", random_tensor({3, 4}, rng, 0.5, 2.0));
    p.add("b", random_tensor({1, 4}, rng, 0.5, 2.0));
    const auto report = check_op(p, [&](ParamStore<D>& s) { return op(s.get("a"), s.get("b")); });
    EXPECT_TRUE(report.passed) << name << " max rel err " << report.max_rel_err;
  }
}

TEST(DiffGrad, MatmulSharedAndBatched) {
  Rng rng(8);
  ParamStore<D> p;
  p.add("a", random_tensor({2, 3, 4}, rng));
  p.add("b", random_tensor({4, 5}, rng));
  p.add("c", random_tensor({2, 5, 3}, rng));
  const auto report = check_op(p, [](ParamStore<D>& s) {
    return matmul(matmul(s.get("a"), s.get("b")), s.get("c"));
  });
  EXPECT_TRUE(report.passed) << report.max_rel_err;
}

TEST(DiffGrad, LayerNormAndConcat) {
  Rng rng(9);
  ParamStore<D> p;
  p.add("x", random_tensor({3, 6}, rng));
  p.add("g", random_tensor({6}, rng, 0.5, 1.5));
  p.add("b", random_tensor({6}, rng));
  p.add("y", random_tensor({3, 2}, rng));
  const auto report = check_op(p, [](ParamStore<D>& s) {
    return concat<D>({layer_norm(s.get("x"), s.get("g"), s.get("b")), s.get("y")}, 1);
  });
  EXPECT_TRUE(report.passed) << report.max_rel_err;
}

TEST(DiffOps, MatmulMatchesTripleLoop) {
  Rng rng(2);
  const auto a = random_tensor({3, 4}, rng), b = random_tensor({4, 2}, rng);
  const auto c = matmul(Var<D>::constant(a), Var<D>::constant(b)).value();
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      double s = 0;
      for (std::size_t k = 0; k < 4; ++k) s += a.at({i, k}) * b.at({k, j});
      EXPECT_NEAR(c.at({i, j}), s, 1e-12);
    }
  }
}

TEST(DiffOps, SoftmaxRowsSumToOneAndIgnoreShifts) {
  Rng rng(4);
  const auto x = random_tensor({4, 7}, rng, -5, 5);
  const auto s = softmax(Var<D>::constant(x)).value();
  Tensor<D> shifted = x;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 7; ++j) shifted.at({i, j}) += 100.0 * static_cast<double>(i + 1);
  const auto s2 = softmax(Var<D>::constant(shifted)).value();
  for (std::size_t i = 0; i < 4; ++i) {
    double row = 0;
    for (std::size_t j = 0; j < 7; ++j) {
      row += s.at({i, j});
      EXPECT_NEAR(s.at({i, j}), s2.at({i, j}), 1e-12);
    }
    EXPECT_NEAR(row, 1.0, 1e-12);
  }
}

TEST(DiffOps, GeluIsExactErfForm) {
  const auto g = gelu(Var<D>::constant(Tensor<D>::from({3}, {-1.0, 0.0, 1.0}))).value();
  EXPECT_NEAR(g[0], -0.15865525393145707, 1e-15);
  EXPECT_EQ(g[1], 0.0);
  EXPECT_NEAR(g[2], 0.8413447460685429, 1e-15);
}

TEST(DiffOps, LayerNormNormalizesLastAxis) {
  Rng rng(6);
  const auto x = random_tensor({5, 16}, rng, -3, 3);
  const auto y = layer_norm(Var<D>::constant(x), Var<D>::constant(Tensor<D>({16}, 1.0)),
                            Var<D>::constant(Tensor<D>({16}, 0.0)))
                     .value();
  for (std::size_t i = 0; i < 5; ++i) {
    double m = 0, v = 0;
    for (std::size_t j = 0; j < 16; ++j) m += y.at({i, j});
    m /= 16;
    for (std::size_t j = 0; j < 16; ++j) v += (y.at({i, j}) - m) * (y.at({i, j}) - m);
    EXPECT_NEAR(m, 0.0, 1e-12);
    EXPECT_NEAR(v / 16, 1.0, 1e-4);  // eps 1e-6 against a variance of order 1
  }
}

TEST(DiffOps, VarianceUnbiasedByDefault) {
  const auto x = Var<D>::constant(Tensor<D>::from({4, 1}, {1, 2, 3, 4}));
  EXPECT_NEAR(variance(x, 0).value()[0], 5.0 / 3.0, 1e-15);
  EXPECT_NEAR(variance(x, 0, false).value()[0], 1.25, 1e-15);
}

TEST(DiffBackward, GradientIsLinearInTheLoss) {
  Rng rng(12);
  const auto x0 = random_tensor({3, 3}, rng, 0.5, 2);
  auto grad_of = [&](double a, double b) {
    auto x = Var<D>::leaf(x0, true);
    auto loss = add(scale(sum(square(x)), a), scale(sum(log(x)), b));
    backward(loss);
    return x.grad();
  };
  const auto g1 = grad_of(1, 0), g2 = grad_of(0, 1), g = grad_of(2, -3);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(g[i], 2 * g1[i] - 3 * g2[i], 1e-12);
}

TEST(DiffBackward, LeafGradientsAccumulateUntilZeroed) {
  auto x = Var<D>::leaf(Tensor<D>::from({2}, {1.0, 2.0}), true);
  backward(sum(scale(x, 3.0)));
  backward(sum(scale(x, 3.0)));
  EXPECT_EQ(x.grad()[0], 6.0);
  x.zero_grad();
  EXPECT_EQ(x.grad()[1], 0.0);
}

TEST(DiffBackward, SharedSubexpressionCountsTwice) {
  auto x = Var<D>::leaf(Tensor<D>::scalar(3.0), true);
  auto y = mul(x, x);
  backward(add(y, y));
  EXPECT_EQ(x.grad().item(), 12.0);
}

TEST(DiffBackward, NonScalarLossRejected) {
  auto x = Var<D>::leaf(Tensor<D>({2}, 1.0), true);
  EXPECT_THROW(backward(scale(x, 2.0)), ContractError);
}

TEST(DiffErrors, ShapeAndDomain) {
  const auto a = Var<D>::constant(Tensor<D>({2, 3}));
  const auto b = Var<D>::constant(Tensor<D>({4, 3}));
  EXPECT_THROW(add(a, b), ShapeError);
  EXPECT_THROW(matmul(a, a), ShapeError);
  EXPECT_THROW(log(Var<D>::constant(Tensor<D>::from({1}, {0.0}))), DomainError);
  EXPECT_THROW(sqrt(Var<D>::constant(Tensor<D>::from({1}, {-1.0}))), DomainError);
}

TEST(DiffTensor, IndexingAndReshape) {
  Tensor<float> t({2, 3});
  t.at({1, 2}) = 5.0f;
  EXPECT_EQ(t[5], 5.0f);
  EXPECT_EQ(t.reshaped({3, 2}).at({2, 1}), 5.0f);
  EXPECT_THROW(t.reshaped({4, 2}), ShapeError);
  EXPECT_EQ(Tensor<float>::scalar(2.0f).rank(), 0u);
}

TEST(DiffParamStore, DuplicatesMissingAndFingerprint) {
  ParamStore<float> p;
  p.add("w", Tensor<float>({2, 2}, 1.0f));
  p.add("rs", Tensor<float>({2}, 0.0f), false);
  EXPECT_THROW(p.add("w", Tensor<float>({1})), ContractError);
  EXPECT_THROW(p.get("nope"), ContractError);
  EXPECT_EQ(p.trainable_count(), 4u);
  const auto copy = p.clone();
  EXPECT_EQ(copy.fingerprint(), p.fingerprint());
  p.get("w").mutable_value()[3] = 1.5f;
  EXPECT_NE(copy.fingerprint(), p.fingerprint());
}

TEST(DiffCheckpoint, RoundTripAndCorruption) {
  NamedTensors t = {{"a.weight", Tensor<float>::from({2, 3}, {1, 2, 3, 4, 5, 6})},
                    {"b", Tensor<float>::from({1}, {-0.5f})}};
  const auto bytes = encode_checkpoint(t);
  const auto back = decode_checkpoint(bytes);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].first, "a.weight");
  EXPECT_EQ(back[0].second, t[0].second);
  EXPECT_EQ(back[1].second, t[1].second);

  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode_checkpoint(bad), FormatError);
  auto truncated = bytes;
  truncated.pop_back();
  EXPECT_THROW(decode_checkpoint(truncated), FormatError);
}

TEST(DiffCheckpoint, LoadIntoChecksShapes) {
  ParamStore<float> p;
  p.add("w", Tensor<float>({2}));
  EXPECT_THROW(load_into(p, {{"w", Tensor<float>({3})}}), ContractError);
  EXPECT_THROW(load_into(p, {{"v", Tensor<float>({2})}}), ContractError);
  load_into(p, {{"w", Tensor<float>::from({2}, {7, 8})}, {"extra", Tensor<float>({1})}});
  EXPECT_EQ(p.value("w")[1], 8.0f);
  EXPECT_THROW(load_into(p, {{"w", Tensor<float>({2})}, {"extra", Tensor<float>({1})}}, true), ContractError);
}

}  // namespace
}  // namespace tovreg::diff
