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

#include "tovreg/diff/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "tovreg/rng.hpp"

namespace tovreg::diff {

std::vector<std::string> GradCheckReport::failures() const {
  std::vector<std::string> out;
  for (const auto& p : params) {
    if (!p.passed) out.push_back(p.name);
  }
  return out;
}

GradCheckReport grad_check(ParamStore<double>& params, const ScalarModel& model,
                           const GradCheckOptions& options) {
  params.zero_grad();
  backward(model(params));

  // Perturbed evaluations only need values; detaching the leaves keeps ops
  // from recording closures and gradient buffers.
  std::vector<bool> saved_flags;
  for (auto& entry : params.entries()) {
    saved_flags.push_back(entry.var.node().requires_grad);
    entry.var.node().requires_grad = false;
  }

  GradCheckReport report;
  Rng rng(options.seed);
  for (auto& entry : params.entries()) {
    if (!entry.trainable) continue;
    const Tensor<double> analytic = entry.var.grad();
    Tensor<double>& value = entry.var.mutable_value();

    std::vector<std::size_t> picks;
    if (options.max_entries_per_param == 0 || options.max_entries_per_param >= value.size()) {
      picks.resize(value.size());
      for (std::size_t i = 0; i < picks.size(); ++i) picks[i] = i;
    } else {
      auto perm = rng.permutation(value.size());
      picks.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(options.max_entries_per_param));
      std::sort(picks.begin(), picks.end());
    }

    ParamGradResult r;
    r.name = entry.name;
    for (std::size_t i : picks) {
      const double saved = value[i];
      value[i] = saved + options.eps;
      const double up = model(params).value().item();
      value[i] = saved - options.eps;
      const double down = model(params).value().item();
      value[i] = saved;
      const double numeric = (up - down) / (2.0 * options.eps);
      const double err = std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(analytic[i]));
      r.max_rel_err = std::max(r.max_rel_err, std::isfinite(err) ? err : INFINITY);
      r.max_abs_analytic = std::max(r.max_abs_analytic, std::abs(analytic[i]));
      ++r.entries_checked;
    }
    r.passed = r.max_rel_err < options.tol;
    report.max_rel_err = std::max(report.max_rel_err, r.max_rel_err);
    report.passed = report.passed && r.passed;
    report.params.push_back(std::move(r));
  }
  for (std::size_t k = 0; k < saved_flags.size(); ++k) {
    params.entries()[k].var.node().requires_grad = saved_flags[k];
  }
  params.zero_grad();
  return report;
}

}  // namespace tovreg::diff
