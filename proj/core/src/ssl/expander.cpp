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

#include "tovreg/ssl/expander.hpp"

#include <cmath>
#include <string>

#include "tovreg/errors.hpp"
#include "tovreg/rng.hpp"

namespace tovreg::ssl {

using diff::Shape;
using diff::Tensor;
using diff::Var;

namespace {

std::string ename(const std::string& s) { return std::string(kExpanderPrefix) + s; }
std::string fc(int i) { return ename("fc" + std::to_string(i)); }
std::string bn(int i) { return ename("bn" + std::to_string(i)); }

template <typename T>
Var<T> batch_norm(ParamStore<T>& params, const Var<T>& x, int layer, bool training) {
  const std::string prefix = bn(layer);
  const Var<T>& gain = params.get(prefix + ".weight");
  const Var<T>& bias = params.get(prefix + ".bias");
  Var<T>& running_mean = params.get(prefix + ".running_mean");
  Var<T>& running_var = params.get(prefix + ".running_var");
  const T eps = static_cast<T>(kBatchNormEps);

  Var<T> normalized;
  if (training) {
    const std::size_t n = x.shape()[0];
    if (n < 2) throw ContractError("expander: batch norm in training mode needs N >= 2, got N = " + std::to_string(n));
    auto mu = diff::mean(x, 0);
    auto var = diff::variance(x, 0, /*unbiased=*/false);
    normalized = diff::div(diff::sub(x, mu), diff::sqrt(diff::add_scalar(var, eps)));

    const T m = static_cast<T>(kBatchNormMomentum);
    const T unbias = static_cast<T>(n) / static_cast<T>(n - 1);
    Tensor<T>& rm = running_mean.mutable_value();
    Tensor<T>& rv = running_var.mutable_value();
    for (std::size_t j = 0; j < rm.size(); ++j) {
      rm[j] = (T{1} - m) * rm[j] + m * mu.value()[j];
      rv[j] = (T{1} - m) * rv[j] + m * var.value()[j] * unbias;
    }
  } else {
    Tensor<T> inv(running_var.shape());
    for (std::size_t j = 0; j < inv.size(); ++j) inv[j] = T{1} / std::sqrt(running_var.value()[j] + eps);
    normalized = diff::mul(diff::sub(x, Var<T>::constant(running_mean.value())), Var<T>::constant(std::move(inv)));
  }
  return diff::add(diff::mul(normalized, gain), bias);
}

}  // namespace

template <typename T>
void add_expander_params(ParamStore<T>& params, int in_dim, const std::vector<int>& widths, std::uint64_t seed) {
  if (widths.empty()) throw ConfigError("ssl.expander", "needs at least one layer");
  Rng rng(substream(seed, streams::kInit + 100));
  std::size_t in = static_cast<std::size_t>(in_dim);
  for (std::size_t i = 0; i < widths.size(); ++i) {
    if (widths[i] < 1) throw ConfigError("ssl.expander", "layer widths must be positive");
    const std::size_t out = static_cast<std::size_t>(widths[i]);
    const bool last = i + 1 == widths.size();
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    Tensor<T> w(Shape{in, out});
    for (T& v : w.data()) v = static_cast<T>(rng.uniform(-bound, bound));
    params.add(fc(static_cast<int>(i)) + ".weight", std::move(w));
    if (!last) {
      Tensor<T> b(Shape{out});
      for (T& v : b.data()) v = static_cast<T>(rng.uniform(-bound, bound));
      params.add(fc(static_cast<int>(i)) + ".bias", std::move(b));
      params.add(bn(static_cast<int>(i)) + ".weight", Tensor<T>(Shape{out}, T{1}));
      params.add(bn(static_cast<int>(i)) + ".bias", Tensor<T>(Shape{out}, T{0}));
      params.add(bn(static_cast<int>(i)) + ".running_mean", Tensor<T>(Shape{out}, T{0}), false);
      params.add(bn(static_cast<int>(i)) + ".running_var", Tensor<T>(Shape{out}, T{1}), false);
    }
    in = out;
  }
}

template <typename T>
int expander_depth(const ParamStore<T>& params) {
  int n = 0;
  while (params.contains(fc(n) + ".weight")) ++n;
  return n;
}

template <typename T>
Var<T> expander_forward(ParamStore<T>& params, const Var<T>& y, bool training) {
  const int layers = expander_depth(params);
  if (layers == 0) throw ContractError("expander: no parameters under '" + std::string(kExpanderPrefix) + "'");
  Var<T> x = y;
  for (int i = 0; i < layers; ++i) {
    x = diff::matmul(x, params.get(fc(i) + ".weight"));
    if (i + 1 == layers) break;
    x = diff::add(x, params.get(fc(i) + ".bias"));
    x = diff::relu(batch_norm(params, x, i, training));
  }
  return x;
}

template void add_expander_params(ParamStore<float>&, int, const std::vector<int>&, std::uint64_t);
template void add_expander_params(ParamStore<double>&, int, const std::vector<int>&, std::uint64_t);
template int expander_depth(const ParamStore<float>&);
template int expander_depth(const ParamStore<double>&);
template Var<float> expander_forward(ParamStore<float>&, const Var<float>&, bool);
template Var<double> expander_forward(ParamStore<double>&, const Var<double>&, bool);

}  // namespace tovreg::ssl
