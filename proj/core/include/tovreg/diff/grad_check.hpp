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
#include <functional>
#include <string>
#include <vector>

#include "tovreg/diff/param_store.hpp"

namespace tovreg::diff {

struct GradCheckOptions {
  double eps = 1e-5;
  double tol = 1e-4;
  // Entries checked per parameter; 0 checks every entry.
  std::size_t max_entries_per_param = 0;
  std::uint64_t seed = 0;  // picks the entries when subsampling
};

struct ParamGradResult {
  std::string name;
  std::size_t entries_checked = 0;
  double max_rel_err = 0.0;  // max |analytic - numeric| / max(1, |analytic|)
  double max_abs_analytic = 0.0;
  bool passed = true;
};

struct GradCheckReport {
  std::vector<ParamGradResult> params;
  double max_rel_err = 0.0;
  bool passed = true;

  // Names of the parameters that failed.
  std::vector<std::string> failures() const;
};

// Scalar function of the parameters. It may mutate non-trainable entries
// (batch-norm running statistics) but must be deterministic in the trainable
// ones.
using ScalarModel = std::function<Var<double>(ParamStore<double>&)>;

// Compares backward() against central differences for every trainable
// parameter. Report-only: never throws on mismatch.
GradCheckReport grad_check(ParamStore<double>& params, const ScalarModel& model,
                           const GradCheckOptions& options = {});

}  // namespace tovreg::diff
