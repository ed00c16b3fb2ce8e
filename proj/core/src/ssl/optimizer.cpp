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

#include "tovreg/ssl/optimizer.hpp"

#include <cmath>
#include <numbers>

namespace tovreg::ssl {

template <typename T>
void SgdOptimizer<T>::step(ParamStore<T>& params, double lr) {
  for (auto& e : params.entries()) {
    if (!e.trainable || !e.var.node().has_grad) continue;
    Tensor<T>& p = e.var.mutable_value();
    Tensor<T> g = e.var.node().grad;
    const bool adapt = p.rank() >= 2;
    if (adapt && options_.weight_decay != 0.0) {
      const T wd = static_cast<T>(options_.weight_decay);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += wd * p[i];
    }
    if (adapt && options_.lars) {
      double pn = 0.0, gn = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) {
        pn += static_cast<double>(p[i]) * p[i];
        gn += static_cast<double>(g[i]) * g[i];
      }
      pn = std::sqrt(pn);
      gn = std::sqrt(gn);
      if (pn > 0.0 && gn > 0.0) {
        const T trust = static_cast<T>(options_.lars_eta * pn / gn);
        for (T& v : g.data()) v *= trust;
      }
    }
    auto [it, fresh] = momentum_.try_emplace(e.name, p.shape(), T{0});
    Tensor<T>& buf = it->second;
    const T mom = static_cast<T>(options_.momentum);
    const T step = static_cast<T>(lr);
    for (std::size_t i = 0; i < g.size(); ++i) {
      buf[i] = fresh ? g[i] : mom * buf[i] + g[i];
      p[i] -= step * buf[i];
    }
  }
}

template <typename T>
void AdamOptimizer<T>::step(ParamStore<T>& params, double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (auto& e : params.entries()) {
    if (!e.trainable || !e.var.node().has_grad) continue;
    Tensor<T>& p = e.var.mutable_value();
    const Tensor<T>& g = e.var.node().grad;
    Tensor<T>& m = m_.try_emplace(e.name, p.shape(), T{0}).first->second;
    Tensor<T>& v = v_.try_emplace(e.name, p.shape(), T{0}).first->second;
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = static_cast<T>(beta1_ * m[i] + (1.0 - beta1_) * g[i]);
      v[i] = static_cast<T>(beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i]);
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      p[i] = static_cast<T>(p[i] - lr * mhat / (std::sqrt(vhat) + eps_));
    }
  }
}

double scheduled_lr(std::size_t step, std::size_t total_steps, std::size_t warmup_steps, double base_lr,
                    double final_lr) {
  if (step < warmup_steps) return base_lr * static_cast<double>(step + 1) / static_cast<double>(warmup_steps);
  if (total_steps <= warmup_steps) return base_lr;
  const double progress =
      static_cast<double>(step - warmup_steps) / static_cast<double>(total_steps - warmup_steps);
  const double q = 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
  return base_lr * q + final_lr * (1.0 - q);
}

template class SgdOptimizer<float>;
template class SgdOptimizer<double>;
template class AdamOptimizer<float>;
template class AdamOptimizer<double>;

}  // namespace tovreg::ssl
