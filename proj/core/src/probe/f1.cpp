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

#include "tovreg/probe/f1.hpp"

#include "tovreg/errors.hpp"

namespace tovreg::probe {

F1Average parse_f1_average(std::string_view name) {
  if (name == "macro") return F1Average::kMacro;
  if (name == "weighted") return F1Average::kWeighted;
  throw ConfigError("probe.f1", "expected macro or weighted, got '" + std::string(name) + "'");
}

std::string to_string(F1Average average) { return average == F1Average::kMacro ? "macro" : "weighted"; }

F1Report evaluate_f1(std::span<const int> predictions, std::span<const int> labels, int n_classes) {
  if (labels.empty()) throw ContractError("evaluate_f1: empty test set");
  if (predictions.size() != labels.size()) throw ContractError("evaluate_f1: predictions and labels differ in length");
  if (n_classes < 1) throw ContractError("evaluate_f1: n_classes must be positive");
  const auto K = static_cast<std::size_t>(n_classes);
  std::vector<std::size_t> tp(K, 0);
  F1Report r;
  r.support.assign(K, 0);
  r.predicted.assign(K, 0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int p = predictions[i], l = labels[i];
    if (p < 0 || p >= n_classes || l < 0 || l >= n_classes) {
      throw ContractError("evaluate_f1: class index out of range at position " + std::to_string(i));
    }
    ++r.predicted[static_cast<std::size_t>(p)];
    ++r.support[static_cast<std::size_t>(l)];
    if (p == l) {
      ++tp[static_cast<std::size_t>(l)];
      ++correct;
    }
  }
  r.n = labels.size();
  r.accuracy = static_cast<double>(correct) / static_cast<double>(r.n);
  r.precision.assign(K, 0.0);
  r.recall.assign(K, 0.0);
  r.f1.assign(K, 0.0);
  double macro_sum = 0.0, weighted_sum = 0.0;
  std::size_t present = 0;
  for (std::size_t k = 0; k < K; ++k) {
    const double t = static_cast<double>(tp[k]);
    if (r.predicted[k]) r.precision[k] = t / static_cast<double>(r.predicted[k]);
    if (r.support[k]) r.recall[k] = t / static_cast<double>(r.support[k]);
    // 2tp / (predicted + support) equals 2PR / (P + R) whenever P + R > 0.
    const std::size_t denom = r.predicted[k] + r.support[k];
    if (denom) r.f1[k] = 2.0 * t / static_cast<double>(denom);
    if (denom) {
      ++present;
      macro_sum += r.f1[k];
    }
    weighted_sum += r.f1[k] * static_cast<double>(r.support[k]);
  }
  r.macro = present ? macro_sum / static_cast<double>(present) : 0.0;
  r.weighted = weighted_sum / static_cast<double>(r.n);
  return r;
}

}  // namespace tovreg::probe
