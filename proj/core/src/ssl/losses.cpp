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

#include "tovreg/ssl/losses.hpp"

#include <string>

#include "tovreg/errors.hpp"

namespace tovreg::ssl {

using diff::Shape;
using diff::Tensor;

namespace {

template <typename T>
void require_batch(const char* op, const Var<T>& z) {
  if (z.shape().size() != 2) throw ShapeError(std::string(op) + ": expected N x d, got " + diff::shape_str(z.shape()));
  if (z.shape()[0] < 2) {
    throw ContractError(std::string(op) + ": needs a batch of at least 2, got N = " + std::to_string(z.shape()[0]));
  }
}

}  // namespace

template <typename T>
Var<T> invariance_loss(const Var<T>& z, const Var<T>& z_prime) {
  if (z.shape() != z_prime.shape() || z.shape().size() != 2) {
    throw ShapeError("invariance_loss: shapes " + diff::shape_str(z.shape()) + " and " +
                     diff::shape_str(z_prime.shape()) + " must be equal N x d");
  }
  const T n = static_cast<T>(z.shape()[0]);
  return diff::scale(diff::sum(diff::square(diff::sub(z, z_prime))), T{1} / n);
}

template <typename T>
Var<T> variance_loss(const Var<T>& z, T gamma) {
  require_batch("variance_loss", z);
  auto var = diff::relu(diff::variance(z, 0, /*unbiased=*/true));
  auto std = diff::sqrt(diff::add_scalar(var, static_cast<T>(kVarianceEps)));
  auto hinge = diff::relu(diff::add_scalar(diff::scale(std, T{-1}), gamma));
  return diff::mean(hinge);
}

template <typename T>
Var<T> covariance_loss(const Var<T>& z) {
  require_batch("covariance_loss", z);
  const std::size_t n = z.shape()[0];
  const std::size_t d = z.shape()[1];
  auto centered = diff::sub(z, diff::mean(z, 0));
  auto cov = diff::scale(diff::matmul(diff::transpose(centered), centered), T{1} / static_cast<T>(n - 1));
  Tensor<T> off_diag(Shape{d, d}, T{1});
  for (std::size_t i = 0; i < d; ++i) off_diag[i * d + i] = T{0};
  auto masked = diff::mul(cov, Var<T>::constant(std::move(off_diag)));
  return diff::scale(diff::sum(diff::square(masked)), T{1} / static_cast<T>(d));
}

template <typename T>
Var<T> temporal_loss(const Var<T>& logits, std::span<const int> labels) {
  const Shape& s = logits.shape();
  const bool column = s.size() == 2 && s[1] == 1;
  if (!(s.size() == 1 || column)) throw ShapeError("temporal_loss: logits must be N or N x 1, got " + diff::shape_str(s));
  const std::size_t n = s[0];
  if (labels.size() != n) {
    throw ContractError("temporal_loss: " + std::to_string(labels.size()) + " labels for " + std::to_string(n) +
                        " logits");
  }
  Tensor<T> pos(s), neg(s);
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] != 0 && labels[i] != 1) {
      throw ContractError("temporal_loss: label " + std::to_string(labels[i]) + " at row " + std::to_string(i) +
                          " is not 0 or 1");
    }
    pos[i] = static_cast<T>(labels[i]);
    neg[i] = T{1} - pos[i];
  }
  const T eps = static_cast<T>(kLogEps);
  auto p = diff::sigmoid(logits);
  auto log_p = diff::log(diff::add_scalar(p, eps));
  auto log_q = diff::log(diff::add_scalar(diff::add_scalar(diff::scale(p, T{-1}), T{1}), eps));
  auto ll = diff::add(diff::mul(log_p, Var<T>::constant(std::move(pos))),
                      diff::mul(log_q, Var<T>::constant(std::move(neg))));
  return diff::scale(diff::sum(ll), T{-1} / static_cast<T>(n));
}

template Var<float> invariance_loss(const Var<float>&, const Var<float>&);
template Var<double> invariance_loss(const Var<double>&, const Var<double>&);
template Var<float> variance_loss(const Var<float>&, float);
template Var<double> variance_loss(const Var<double>&, double);
template Var<float> covariance_loss(const Var<float>&);
template Var<double> covariance_loss(const Var<double>&);
template Var<float> temporal_loss(const Var<float>&, std::span<const int>);
template Var<double> temporal_loss(const Var<double>&, std::span<const int>);

}  // namespace tovreg::ssl
