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
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "tovreg/vit/encoder.hpp"

// Collapse and representation statistics over N x D matrices whose rows are
// representations. Variances are unbiased throughout.
namespace tovreg::metrics {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Mean over features of the per-feature standard deviation across rows.
// Requires N >= 2.
double representation_std(const Matrix& r);

struct CorrelationResult {
  double value = 0.0;             // mean |r| over off-diagonal pairs of usable features
  std::size_t used_features = 0;
  std::size_t excluded_features = 0;  // zero variance
};

// Requires N >= 3 and at least two features with non-zero variance.
CorrelationResult correlation_metric(const Matrix& r);

// Eigenvalues of the (symmetric PSD) feature covariance, which are its
// singular values, in descending order. Values below D * eps * max are
// reported as exactly 0. Requires N >= 2.
Vector covariance_spectrum(const Matrix& r);

// Unbiased feature covariance (D x D).
Matrix covariance(const Matrix& r);

// Row cosine similarities. Throws ContractError naming a zero-norm row.
Matrix cosine_similarity_matrix(const Matrix& r);

// Per block, the fraction of captured post-GELU MLP activations with
// |v| <= tol, pooled over samples and tokens. Throws ContractError if an
// output was produced without capture.
template <typename T>
std::vector<double> sparsity_profile(std::span<const vit::EncoderOutput<T>> outputs, double tol = 1e-6);

// Sample Pearson correlation. Requires equal lengths >= 3 and non-zero
// variances.
double pearson(std::span<const double> a, std::span<const double> b);

// Row-major N x D tensor -> Eigen matrix.
template <typename T>
Matrix to_matrix(const diff::Tensor<T>& t);

}  // namespace tovreg::metrics
