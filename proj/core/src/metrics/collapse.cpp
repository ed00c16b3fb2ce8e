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

#include "tovreg/metrics/collapse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tovreg/errors.hpp"

namespace tovreg::metrics {

namespace {

void require_rows(const Matrix& r, Eigen::Index n, const char* op) {
  if (r.rows() < n) {
    throw ContractError(std::string(op) + ": needs at least " + std::to_string(n) + " rows, got " +
                        std::to_string(r.rows()));
  }
  if (r.cols() < 1) throw ContractError(std::string(op) + ": no features");
}

Matrix centered(const Matrix& r) { return r.rowwise() - r.colwise().mean(); }

}  // namespace

Matrix covariance(const Matrix& r) {
  require_rows(r, 2, "covariance");
  const Matrix c = centered(r);
  return (c.transpose() * c) / static_cast<double>(r.rows() - 1);
}

double representation_std(const Matrix& r) {
  require_rows(r, 2, "representation_std");
  const Matrix c = centered(r);
  const Vector var = c.colwise().squaredNorm().transpose() / static_cast<double>(r.rows() - 1);
  return var.array().sqrt().mean();
}

CorrelationResult correlation_metric(const Matrix& r) {
  require_rows(r, 3, "correlation_metric");
  const Matrix c = centered(r);
  const Vector norms = c.colwise().norm().transpose();
  std::vector<Eigen::Index> usable;
  for (Eigen::Index j = 0; j < c.cols(); ++j) {
    if (norms[j] > 0.0) usable.push_back(j);
  }
  CorrelationResult out;
  out.used_features = usable.size();
  out.excluded_features = static_cast<std::size_t>(c.cols()) - usable.size();
  if (usable.size() < 2) throw ContractError("correlation_metric: fewer than two features with non-zero variance");
  Matrix u(c.rows(), static_cast<Eigen::Index>(usable.size()));
  for (std::size_t k = 0; k < usable.size(); ++k) u.col(static_cast<Eigen::Index>(k)) = c.col(usable[k]) / norms[usable[k]];
  const Matrix corr = u.transpose() * u;
  const auto k = corr.rows();
  double total = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      if (i != j) total += std::min(1.0, std::abs(corr(i, j)));
    }
  }
  out.value = total / static_cast<double>(k * (k - 1));
  return out;
}

Vector covariance_spectrum(const Matrix& r) {
  const Matrix cov = covariance(r);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(cov, Eigen::EigenvaluesOnly);
  Vector ev = solver.eigenvalues().reverse();  // ascending -> descending
  const double top = std::max(0.0, ev.size() ? ev[0] : 0.0);
  const double cutoff = top * static_cast<double>(ev.size()) * std::numeric_limits<double>::epsilon();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] <= cutoff) ev[i] = 0.0;
  }
  return ev;
}

Matrix cosine_similarity_matrix(const Matrix& r) {
  if (r.rows() < 1 || r.cols() < 1) throw ContractError("cosine_similarity_matrix: empty input");
  Matrix unit = r;
  for (Eigen::Index i = 0; i < r.rows(); ++i) {
    const double n = r.row(i).norm();
    if (!(n > 0.0)) throw ContractError("cosine_similarity_matrix: row " + std::to_string(i) + " has zero norm");
    unit.row(i) /= n;
  }
  Matrix s = unit * unit.transpose();
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    s(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < s.cols(); ++j) {
      const double v = std::clamp(0.5 * (s(i, j) + s(j, i)), -1.0, 1.0);
      s(i, j) = s(j, i) = v;
    }
  }
  return s;
}

template <typename T>
std::vector<double> sparsity_profile(std::span<const vit::EncoderOutput<T>> outputs, double tol) {
  if (outputs.empty()) throw ContractError("sparsity_profile: no outputs");
  const std::size_t depth = outputs[0].mlp_activations.size();
  std::vector<double> zeros(depth, 0.0), counts(depth, 0.0);
  for (const auto& out : outputs) {
    if (!out.captured) throw ContractError("sparsity_profile: encoder output was produced without capture");
    if (out.mlp_activations.size() != depth) throw ContractError("sparsity_profile: outputs differ in depth");
    for (std::size_t l = 0; l < depth; ++l) {
      std::size_t z = 0;
      for (T v : out.mlp_activations[l].data()) {
        if (std::abs(static_cast<double>(v)) <= tol) ++z;
      }
      zeros[l] += static_cast<double>(z);
      counts[l] += static_cast<double>(out.mlp_activations[l].size());
    }
  }
  for (std::size_t l = 0; l < depth; ++l) zeros[l] /= counts[l];
  return zeros;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ContractError("pearson: lengths differ");
  if (a.size() < 3) throw ContractError("pearson: needs at least 3 pairs");
  const Eigen::Map<const Vector> x(a.data(), static_cast<Eigen::Index>(a.size()));
  const Eigen::Map<const Vector> y(b.data(), static_cast<Eigen::Index>(b.size()));
  const Vector cx = x.array() - x.mean();
  const Vector cy = y.array() - y.mean();
  const double nx = cx.norm(), ny = cy.norm();
  if (!(nx > 0.0) || !(ny > 0.0)) throw ContractError("pearson: zero variance");
  return std::clamp(cx.dot(cy) / (nx * ny), -1.0, 1.0);
}

template <typename T>
Matrix to_matrix(const diff::Tensor<T>& t) {
  if (t.rank() != 2) throw ShapeError("to_matrix: expected rank 2, got " + diff::shape_str(t.shape()));
  Matrix m(static_cast<Eigen::Index>(t.dim(0)), static_cast<Eigen::Index>(t.dim(1)));
  for (std::size_t i = 0; i < t.dim(0); ++i) {
    for (std::size_t j = 0; j < t.dim(1); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = static_cast<double>(t[i * t.dim(1) + j]);
    }
  }
  return m;
}

template std::vector<double> sparsity_profile<float>(std::span<const vit::EncoderOutput<float>>, double);
template std::vector<double> sparsity_profile<double>(std::span<const vit::EncoderOutput<double>>, double);
template Matrix to_matrix<float>(const diff::Tensor<float>&);
template Matrix to_matrix<double>(const diff::Tensor<double>&);

}  // namespace tovreg::metrics
