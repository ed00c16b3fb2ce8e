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

#include "tovreg/probe/probe.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <fmt/format.h>

#include "tovreg/diff/ops.hpp"
#include "tovreg/errors.hpp"
#include "tovreg/format.hpp"
#include "tovreg/metrics/collapse.hpp"
#include "tovreg/metrics/diagnose.hpp"
#include "tovreg/rng.hpp"
#include "tovreg/ssl/optimizer.hpp"
#include "tovreg/vit/encoder.hpp"

namespace tovreg::probe {

using diff::ParamStore;
using diff::Shape;
using diff::Var;

void ProbeConfig::validate() const {
  if (epochs < 1) throw ConfigError("probe.epochs", "must be >= 1");
  if (batch_size < 1) throw ConfigError("probe.batch_size", "must be >= 1");
  if (!(lr > 0.0)) throw ConfigError("probe.lr", "must be > 0");
  if (n_actions != 0 && n_actions < 2) throw ConfigError("probe.n_actions", "must be >= 2 (or 0 to infer)");
}

int infer_classes(std::span<const int> labels, int configured) {
  int k = configured;
  if (k == 0) {
    int mx = 0;
    for (int l : labels) mx = std::max(mx, l);
    k = std::max(2, mx + 1);
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= k) {
      throw ContractError(fmt::format("probe: label {} at position {} outside [0, {})", labels[i], i, k));
    }
  }
  return k;
}

std::vector<double> LinearProbe::logits(const Tensor<double>& features) const {
  const std::size_t N = features.dim(0), D = features.dim(1), K = bias.size();
  if (weight.dim(0) != D) throw ShapeError("LinearProbe: feature width does not match the weight");
  std::vector<double> out(N * K);
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t k = 0; k < K; ++k) {
      double s = bias[k];
      for (std::size_t d = 0; d < D; ++d) s += features[i * D + d] * weight[d * K + k];
      out[i * K + k] = s;
    }
  }
  return out;
}

std::vector<int> LinearProbe::predict(const Tensor<double>& features) const {
  const auto z = logits(features);
  const std::size_t N = features.dim(0), K = bias.size();
  std::vector<int> out(N);
  for (std::size_t i = 0; i < N; ++i) {
    const auto row = z.begin() + static_cast<std::ptrdiff_t>(i * K);
    out[i] = static_cast<int>(std::max_element(row, row + static_cast<std::ptrdiff_t>(K)) - row);
  }
  return out;
}

namespace {

template <typename T>
Var<T> cross_entropy(const Var<T>& logits, std::span<const int> labels) {
  const std::size_t N = logits.shape()[0], K = logits.shape()[1];
  diff::Tensor<T> onehot(Shape{N, K});
  for (std::size_t i = 0; i < N; ++i) onehot[i * K + static_cast<std::size_t>(labels[i])] = T{1};
  const auto logp = diff::log(diff::add_scalar(diff::softmax(logits), static_cast<T>(1e-12)));
  return diff::scale(diff::sum(diff::mul(logp, Var<T>::constant(std::move(onehot)))), static_cast<T>(-1.0 / N));
}

template <typename T>
diff::Tensor<T> gather_rows(const diff::Tensor<T>& x, std::span<const std::size_t> rows) {
  const std::size_t D = x.dim(1);
  diff::Tensor<T> out(Shape{rows.size(), D});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy(x.ptr() + rows[i] * D, x.ptr() + (rows[i] + 1) * D, out.ptr() + i * D);
  }
  return out;
}

}  // namespace

ProbeTraining train_linear_probe(const Tensor<double>& features, std::span<const int> labels,
                                 const ProbeConfig& config) {
  config.validate();
  if (features.rank() != 2) throw ShapeError("train_linear_probe: features must be N x D");
  const std::size_t N = features.dim(0), D = features.dim(1);
  if (labels.size() != N) throw ContractError("train_linear_probe: one label per feature row required");
  const int K = infer_classes(labels, config.n_actions);

  ParamStore<double> params;
  params.add("probe.weight", Tensor<double>(Shape{D, static_cast<std::size_t>(K)}));
  params.add("probe.bias", Tensor<double>(Shape{static_cast<std::size_t>(K)}));
  ssl::AdamOptimizer<double> adam;
  Rng rng(substream(config.seed, streams::kProbe));
  const std::size_t B = static_cast<std::size_t>(config.batch_size);

  ProbeTraining out;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto order = rng.permutation(N);
    double total = 0.0;
    for (std::size_t start = 0; start < N; start += B) {
      const std::size_t n = std::min(B, N - start);
      const std::span<const std::size_t> rows(order.data() + start, n);
      std::vector<int> y(n);
      for (std::size_t i = 0; i < n; ++i) y[i] = labels[rows[i]];
      params.zero_grad();
      const auto x = Var<double>::constant(gather_rows(features, rows));
      const auto logits = diff::add(diff::matmul(x, params.get("probe.weight")), params.get("probe.bias"));
      const auto loss = cross_entropy(logits, y);
      diff::backward(loss);
      adam.step(params, config.lr);
      total += loss.value().item() * static_cast<double>(n);
    }
    out.loss_curve.push_back(total / static_cast<double>(N));
  }
  out.probe.weight = params.value("probe.weight");
  out.probe.bias = params.value("probe.bias");
  return out;
}

ProbeRun train_probe(const ParamStore<float>& encoder, const vit::ViTConfig& vit, const data::ObservationStore& store,
                     const data::LabeledFrames& train, const ProbeConfig& config) {
  config.validate();
  if (train.frames.empty()) throw ContractError("train_probe: empty training set");
  if (train.labels.size() != train.frames.size()) throw ContractError("train_probe: one label per frame required");
  ProbeRun run;
  run.encoder_hash_before = encoder.fingerprint();
  if (config.freeze_encoder) {
    const auto feats = metrics::encode_frames(encoder, vit, store, train.frames).cast<double>();
    run.training = train_linear_probe(feats, train.labels, config);
    run.encoder = encoder.clone();
    run.encoder_hash_after = encoder.fingerprint();
    return run;
  }

  const int K = infer_classes(train.labels, config.n_actions);
  const std::size_t D = static_cast<std::size_t>(vit.embed_dim);
  ParamStore<float> params;
  for (const auto& e : encoder.entries()) {
    if (e.name.rfind(vit::kPrefix, 0) == 0) params.add(e.name, e.var.value(), e.trainable);
  }
  params.add("probe.weight", Tensor<float>(Shape{D, static_cast<std::size_t>(K)}));
  params.add("probe.bias", Tensor<float>(Shape{static_cast<std::size_t>(K)}));
  ssl::AdamOptimizer<float> adam;
  Rng rng(substream(config.seed, streams::kProbe));
  const std::size_t N = train.frames.size(), B = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto order = rng.permutation(N);
    double total = 0.0;
    for (std::size_t start = 0; start < N; start += B) {
      const std::size_t n = std::min(B, N - start);
      std::vector<data::FrameIndex> frames(n);
      std::vector<int> y(n);
      for (std::size_t i = 0; i < n; ++i) {
        frames[i] = train.frames[order[start + i]];
        y[i] = train.labels[order[start + i]];
      }
      params.zero_grad();
      const auto rep = vit::forward(params, data::frames_batch(store, frames), vit).representation;
      const auto logits = diff::add(diff::matmul(rep, params.get("probe.weight")), params.get("probe.bias"));
      const auto loss = cross_entropy(logits, y);
      if (!std::isfinite(loss.value().item())) throw NumericalError("train_probe: non-finite loss");
      diff::backward(loss);
      adam.step(params, config.lr);
      total += static_cast<double>(loss.value().item()) * static_cast<double>(n);
    }
    run.training.loss_curve.push_back(total / static_cast<double>(N));
  }
  run.training.probe.weight = params.value("probe.weight").cast<double>();
  run.training.probe.bias = params.value("probe.bias").cast<double>();
  run.encoder = params.subset(vit::kPrefix);
  run.encoder_hash_after = run.encoder.fingerprint();
  return run;
}

// ---- results table ----

std::string probe_row_line(const ProbeRow& r) {
  return fmt::format("{},{},{},{},{},{},{}", r.store, r.checkpoint, r.epoch, r.split, format_float(r.f1_macro),
                     format_float(r.f1_weighted), format_float(r.accuracy));
}

void write_probe_results(const std::filesystem::path& path, std::span<const ProbeRow> rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << kProbeHeader << '\n';
  for (const auto& r : rows) out << probe_row_line(r) << '\n';
}

std::vector<double> checkpoint_f1_means(std::span<const ProbeRow> rows, F1Average average) {
  std::vector<std::string> order;
  std::vector<double> sums;
  std::vector<std::size_t> counts;
  for (const auto& r : rows) {
    if (r.split != "test") continue;
    auto it = std::find(order.begin(), order.end(), r.checkpoint);
    std::size_t k;
    if (it == order.end()) {
      order.push_back(r.checkpoint);
      sums.push_back(0.0);
      counts.push_back(0);
      k = order.size() - 1;
    } else {
      k = static_cast<std::size_t>(it - order.begin());
    }
    sums[k] += average == F1Average::kMacro ? r.f1_macro : r.f1_weighted;
    ++counts[k];
  }
  for (std::size_t k = 0; k < sums.size(); ++k) sums[k] /= static_cast<double>(counts[k]);
  return sums;
}

std::vector<double> read_score_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  std::getline(in, line);  // header
  std::vector<double> scores;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto comma = line.rfind(',');
    const std::string cell = comma == std::string::npos ? line : line.substr(comma + 1);
    std::size_t used = 0;
    double v;
    try {
      v = std::stod(cell, &used);
    } catch (const std::exception&) {
      throw FormatError("score CSV: not a number: '" + cell + "'", 0);
    }
    scores.push_back(v);
  }
  return scores;
}

double probe_pearson(std::span<const ProbeRow> rows, std::span<const double> scores, F1Average average) {
  const auto means = checkpoint_f1_means(rows, average);
  if (means.size() != scores.size()) {
    throw ContractError(fmt::format("probe_pearson: {} checkpoints but {} external scores", means.size(),
                                    scores.size()));
  }
  if (means.size() < 3) throw ContractError("probe_pearson: needs at least three checkpoints");
  return metrics::pearson(means, scores);
}

// ---- feature cache ----

void write_feature_cache(const std::filesystem::path& path, const Tensor<float>& features) {
  if (features.rank() != 2) throw ShapeError("feature cache: expected N x D");
  std::vector<std::uint8_t> bytes(8 + features.size() * 4);
  auto put32 = [&](std::size_t at, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes[at + i] = static_cast<std::uint8_t>(v >> (8 * i));
  };
  put32(0, static_cast<std::uint32_t>(features.dim(0)));
  put32(4, static_cast<std::uint32_t>(features.dim(1)));
  for (std::size_t i = 0; i < features.size(); ++i) {
    std::uint32_t u;
    std::memcpy(&u, &features[i], 4);
    put32(8 + 4 * i, u);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Tensor<float> read_feature_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  auto get32 = [&](std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[at + i]) << (8 * i);
    return v;
  };
  if (bytes.size() < 8) throw FormatError("feature cache: truncated header", bytes.size());
  const std::size_t N = get32(0), D = get32(4);
  if (N == 0 || D == 0) throw FormatError("feature cache: zero extent", 0);
  if (bytes.size() != 8 + N * D * 4) throw FormatError("feature cache: payload size mismatch", 8);
  Tensor<float> out(Shape{N, D});
  for (std::size_t i = 0; i < N * D; ++i) {
    const std::uint32_t u = get32(8 + 4 * i);
    std::memcpy(&out[i], &u, 4);
  }
  return out;
}

}  // namespace tovreg::probe
