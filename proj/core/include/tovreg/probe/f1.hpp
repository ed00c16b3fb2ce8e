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
#include <string>
#include <string_view>
#include <vector>

namespace tovreg::probe {

enum class F1Average { kMacro, kWeighted };

// "macro" or "weighted"; throws ConfigError("probe.f1", ...) otherwise.
F1Average parse_f1_average(std::string_view name);
std::string to_string(F1Average average);

// Per-class scores. Precision is 0 for a class that is never predicted,
// recall is 0 for a class with no instances, F1 is 0 when both are 0. The
// macro mean skips classes absent from both predictions and labels; the
// weighted mean weights by support.
struct F1Report {
  std::vector<double> precision, recall, f1;
  std::vector<std::size_t> support, predicted;
  double macro = 0.0;
  double weighted = 0.0;
  double accuracy = 0.0;
  std::size_t n = 0;

  double aggregate(F1Average average) const { return average == F1Average::kMacro ? macro : weighted; }
};

// Throws ContractError on an empty set, length mismatch, or a value outside
// [0, n_classes).
F1Report evaluate_f1(std::span<const int> predictions, std::span<const int> labels, int n_classes);

}  // namespace tovreg::probe
