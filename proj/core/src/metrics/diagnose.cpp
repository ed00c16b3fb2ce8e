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

#include "tovreg/metrics/diagnose.hpp"

#include <algorithm>
#include <fstream>

#include <fmt/format.h>
#include <json.hpp>

#include "tovreg/errors.hpp"
#include "tovreg/format.hpp"
#include "tovreg/rng.hpp"
#include "tovreg/ssl/trainer.hpp"
#include "tovreg/vit/encoder.hpp"

namespace tovreg::metrics {

using diff::Tensor;

diff::Tensor<float> encode_frames(const diff::ParamStore<float>& params, const vit::ViTConfig& vit,
                                  const data::ObservationStore& store, std::span<const data::FrameIndex> frames,
                                  std::size_t batch_size) {
  if (frames.empty()) throw ContractError("encode_frames: no frames");
  if (batch_size == 0) throw ContractError("encode_frames: batch size must be positive");
  const auto p = ssl::frozen(params);
  const std::size_t D = static_cast<std::size_t>(vit.embed_dim);
  Tensor<float> out({frames.size(), D});
  for (std::size_t start = 0; start < frames.size(); start += batch_size) {
    const std::size_t n = std::min(batch_size, frames.size() - start);
    const auto images = data::frames_batch(store, frames.subspan(start, n));
    const auto y = vit::forward(p, images, vit).representation;
    std::copy(y.value().ptr(), y.value().ptr() + n * D, out.ptr() + start * D);
  }
  return out;
}

DiagnosticsBundle diagnose(const diff::ParamStore<float>& params, const vit::ViTConfig& vit,
                           const data::ObservationStore& store, const DiagnoseOptions& options) {
  if (options.batch_size == 0) throw ContractError("diagnose: batch size must be positive");
  std::vector<data::FrameIndex> all;
  for (std::size_t e = 0; e < store.episodes.size(); ++e) {
    for (std::size_t t = 0; t < store.episodes[e].n_frames; ++t) all.push_back({e, t});
  }
  const std::size_t n = std::min(options.sample_n, all.size());
  if (n < 3) throw ContractError("diagnose: needs at least three frames");
  Rng rng(substream(options.seed, streams::kDiagnose));
  rng.shuffle(all.begin(), all.end());
  all.resize(n);
  std::sort(all.begin(), all.end());

  DiagnosticsBundle b;
  b.frames = all;
  b.n = n;
  b.d = static_cast<std::size_t>(vit.embed_dim);
  b.seed = options.seed;

  const auto p = ssl::frozen(params);
  const std::size_t D = b.d;
  Tensor<float> reps({n, D});
  std::vector<double> zero_weighted;
  for (std::size_t start = 0; start < n; start += options.batch_size) {
    const std::size_t m = std::min(options.batch_size, n - start);
    const auto images = data::frames_batch(store, std::span<const data::FrameIndex>(all).subspan(start, m));
    const auto out = vit::forward(p, images, vit, /*capture=*/true);
    std::copy(out.representation.value().ptr(), out.representation.value().ptr() + m * D, reps.ptr() + start * D);
    const auto ratios = sparsity_profile(std::span<const vit::EncoderOutput<float>>(&out, 1), options.sparsity_tol);
    if (zero_weighted.empty()) zero_weighted.assign(ratios.size(), 0.0);
    for (std::size_t l = 0; l < ratios.size(); ++l) zero_weighted[l] += ratios[l] * static_cast<double>(m);
    if (start == 0 && vit.depth > 0) {
      for (const auto& map : vit::attention_maps(out, vit, 0)) b.attention.push_back(to_matrix(map));
    }
  }
  b.sparsity = zero_weighted;
  for (double& v : b.sparsity) v /= static_cast<double>(n);

  const Matrix r = to_matrix(reps);
  b.std_metric = representation_std(r);
  b.corr = correlation_metric(r);
  b.singular_values = covariance_spectrum(r);
  const Eigen::Index m = static_cast<Eigen::Index>(std::min(options.similarity_m, n));
  b.similarity = cosine_similarity_matrix(r.topRows(m));
  return b;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void write_matrix(const std::filesystem::path& path, const Matrix& m) {
  auto out = open_out(path);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_float(m(i, j));
    }
    out << '\n';
  }
}

}  // namespace

std::string summary_json(const DiagnosticsBundle& b) {
  const nlohmann::json j = {{"std", round_sig9(b.std_metric)},
                            {"corr", round_sig9(b.corr.value)},
                            {"n", b.n},
                            {"d", b.d},
                            {"seed", b.seed}};
  return j.dump(2) + "\n";
}

void write_diagnostics(const DiagnosticsBundle& b, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_out(dir / "spectrum.csv");
    out << "index,value\n";
    for (Eigen::Index i = 0; i < b.singular_values.size(); ++i) {
      const double v = b.singular_values[i];
      out << (i + 1) << ',' << (v > 0.0 ? format_float(v) : std::string()) << '\n';
    }
  }
  write_matrix(dir / "similarity.csv", b.similarity);
  {
    auto out = open_out(dir / "sparsity.csv");
    out << "layer,ratio\n";
    for (std::size_t l = 0; l < b.sparsity.size(); ++l) out << (l + 1) << ',' << format_float(b.sparsity[l]) << '\n';
  }
  open_out(dir / "summary.json") << summary_json(b);
  for (std::size_t h = 0; h < b.attention.size(); ++h) {
    write_matrix(dir / fmt::format("attention_head{}.csv", h), b.attention[h]);
  }
}

}  // namespace tovreg::metrics
