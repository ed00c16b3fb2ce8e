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

#include "tovreg/vit/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tovreg/errors.hpp"
#include "tovreg/rng.hpp"

namespace tovreg::vit {

using diff::Shape;

int ViTConfig::pos_grid() const {
  const int p = pos_tokens() - 1;
  int g = static_cast<int>(std::lround(std::sqrt(static_cast<double>(std::max(p, 0)))));
  return g * g == p ? g : -1;
}

void ViTConfig::validate() const {
  if (image_size < 1) throw ConfigError("vit.image_size", "must be positive");
  if (patch_size < 1) throw ConfigError("vit.patch_size", "must be positive");
  if (grid() < 1) throw ConfigError("vit.patch_size", "patch larger than image: no full patch fits");
  if (in_channels < 1) throw ConfigError("vit.in_channels", "must be positive");
  if (embed_dim < 1) throw ConfigError("vit.embed_dim", "must be positive");
  if (depth < 0) throw ConfigError("vit.depth", "must be non-negative");
  if (heads < 1) throw ConfigError("vit.heads", "must be positive");
  if (embed_dim % heads != 0) {
    throw ConfigError("vit.heads", std::to_string(heads) + " does not divide embed_dim " + std::to_string(embed_dim));
  }
  if (mlp_ratio < 1) throw ConfigError("vit.mlp_ratio", "must be positive");
  if (pos_table_tokens != 0 && (pos_table_tokens < 2 || pos_grid() < 1)) {
    throw ConfigError("vit.pos_table_tokens", "must be 0 (grid) or k*k + 1");
  }
}

std::size_t param_count(const ViTConfig& c) {
  const std::size_t d = static_cast<std::size_t>(c.embed_dim);
  const std::size_t h = static_cast<std::size_t>(c.mlp_hidden());
  const std::size_t k = static_cast<std::size_t>(c.patch_dim());
  const std::size_t patch = k * d + d;
  const std::size_t pos = static_cast<std::size_t>(c.pos_tokens()) * d;
  const std::size_t cls = d;
  const std::size_t block = 2 * d                // norm1
                            + d * 3 * d + 3 * d  // qkv
                            + d * d + d          // proj
                            + 2 * d              // norm2
                            + d * h + h          // fc1
                            + h * d + d;         // fc2
  const std::size_t final_norm = 2 * d;
  return patch + pos + cls + static_cast<std::size_t>(c.depth) * block + final_norm;
}

namespace {

std::string pname(const std::string& s) { return std::string(kPrefix) + s; }
std::string bname(int i, const std::string& s) { return pname("blocks." + std::to_string(i) + "." + s); }

struct Expected {
  std::string name;
  Shape shape;
  enum class Init { kWeight, kZero, kOne } init;
};

std::vector<Expected> expected_params(const ViTConfig& c) {
  const std::size_t d = static_cast<std::size_t>(c.embed_dim);
  const std::size_t h = static_cast<std::size_t>(c.mlp_hidden());
  using I = Expected::Init;
  std::vector<Expected> out = {
      {pname("patch_embed.weight"), {static_cast<std::size_t>(c.patch_dim()), d}, I::kWeight},
      {pname("patch_embed.bias"), {d}, I::kZero},
      {pname("cls_token"), {1, 1, d}, I::kZero},
      {pname("pos_embed"), {1, static_cast<std::size_t>(c.pos_tokens()), d}, I::kZero},
  };
  for (int i = 0; i < c.depth; ++i) {
    out.push_back({bname(i, "norm1.weight"), {d}, I::kOne});
    out.push_back({bname(i, "norm1.bias"), {d}, I::kZero});
    out.push_back({bname(i, "attn.qkv.weight"), {d, 3 * d}, I::kWeight});
    out.push_back({bname(i, "attn.qkv.bias"), {3 * d}, I::kZero});
    out.push_back({bname(i, "attn.proj.weight"), {d, d}, I::kWeight});
    out.push_back({bname(i, "attn.proj.bias"), {d}, I::kZero});
    out.push_back({bname(i, "norm2.weight"), {d}, I::kOne});
    out.push_back({bname(i, "norm2.bias"), {d}, I::kZero});
    out.push_back({bname(i, "mlp.fc1.weight"), {d, h}, I::kWeight});
    out.push_back({bname(i, "mlp.fc1.bias"), {h}, I::kZero});
    out.push_back({bname(i, "mlp.fc2.weight"), {h, d}, I::kWeight});
    out.push_back({bname(i, "mlp.fc2.bias"), {d}, I::kZero});
  }
  out.push_back({pname("norm.weight"), {d}, I::kOne});
  out.push_back({pname("norm.bias"), {d}, I::kZero});
  return out;
}

template <typename T>
Var<T> linear(const Var<T>& x, const ParamStore<T>& p, const std::string& prefix) {
  return diff::add(diff::matmul(x, p.get(prefix + ".weight")), p.get(prefix + ".bias"));
}

template <typename T>
Var<T> norm(const Var<T>& x, const ParamStore<T>& p, const std::string& prefix) {
  return diff::layer_norm(x, p.get(prefix + ".weight"), p.get(prefix + ".bias"), T(1e-6));
}

}  // namespace

template <typename T>
Tensor<T> patchify(const Tensor<T>& image, int patch_size) {
  if (image.rank() != 3) throw ShapeError("patchify: expected C x H x W, got " + diff::shape_str(image.shape()));
  Shape batched{1, image.dim(0), image.dim(1), image.dim(2)};
  Tensor<T> out = patchify_batch(image.reshaped(batched), patch_size);
  return out.reshaped({out.dim(1), out.dim(2)});
}

template <typename T>
Tensor<T> patchify_batch(const Tensor<T>& images, int patch_size) {
  if (images.rank() != 4) {
    throw ShapeError("patchify: expected N x C x H x W, got " + diff::shape_str(images.shape()));
  }
  if (patch_size < 1) throw ConfigError("vit.patch_size", "must be positive");
  const std::size_t n = images.dim(0), c = images.dim(1), h = images.dim(2), w = images.dim(3);
  const std::size_t p = static_cast<std::size_t>(patch_size);
  const std::size_t gh = h / p, gw = w / p;
  if (gh == 0 || gw == 0) {
    throw ConfigError("vit.patch_size", "patch " + std::to_string(p) + " larger than image " + std::to_string(h) +
                                            "x" + std::to_string(w));
  }
  const std::size_t k = c * p * p;
  Tensor<T> out(Shape{n, gh * gw, k});
  const T* src = images.ptr();
  T* dst = out.ptr();
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t gy = 0; gy < gh; ++gy) {
      for (std::size_t gx = 0; gx < gw; ++gx) {
        T* row = dst + ((s * gh + gy) * gw + gx) * k;
        for (std::size_t ch = 0; ch < c; ++ch) {
          for (std::size_t py = 0; py < p; ++py) {
            const T* line = src + ((s * c + ch) * h + gy * p + py) * w + gx * p;
            std::copy_n(line, p, row + (ch * p + py) * p);
          }
        }
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> grid_resample_matrix(int from, int to) {
  // 1-D weights first, then the Kronecker product.
  const auto f = static_cast<std::size_t>(from);
  const auto t = static_cast<std::size_t>(to);
  std::vector<double> w1(t * f, 0.0);
  const double ratio = static_cast<double>(from) / static_cast<double>(to);
  for (std::size_t o = 0; o < t; ++o) {
    double src = std::max(0.0, (static_cast<double>(o) + 0.5) * ratio - 0.5);
    std::size_t i0 = std::min(static_cast<std::size_t>(src), f - 1);
    std::size_t i1 = std::min(i0 + 1, f - 1);
    const double lambda = src - static_cast<double>(i0);
    w1[o * f + i0] += 1.0 - lambda;
    w1[o * f + i1] += lambda;
  }
  Tensor<T> m(Shape{t * t, f * f}, T{0});
  for (std::size_t oy = 0; oy < t; ++oy) {
    for (std::size_t ox = 0; ox < t; ++ox) {
      for (std::size_t iy = 0; iy < f; ++iy) {
        const double wy = w1[oy * f + iy];
        if (wy == 0.0) continue;
        for (std::size_t ix = 0; ix < f; ++ix) {
          m[(oy * t + ox) * f * f + iy * f + ix] = static_cast<T>(wy * w1[ox * f + ix]);
        }
      }
    }
  }
  return m;
}

template <typename T>
void check_params(const ParamStore<T>& params, const ViTConfig& config) {
  for (const Expected& e : expected_params(config)) {
    if (!params.contains(e.name)) throw ContractError("encoder parameter mismatch: missing '" + e.name + "'");
    const Shape& got = params.value(e.name).shape();
    if (got != e.shape) {
      throw ContractError("encoder parameter mismatch: '" + e.name + "' has shape " + diff::shape_str(got) +
                          ", config expects " + diff::shape_str(e.shape));
    }
  }
}

template <typename T>
void add_encoder_params(ParamStore<T>& params, const ViTConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(substream(seed, streams::kInit));
  for (const Expected& e : expected_params(config)) {
    Tensor<T> t(e.shape, T{0});
    if (e.init == Expected::Init::kOne) {
      t.fill(T{1});
    } else if (e.init == Expected::Init::kWeight) {
      for (T& v : t.data()) v = static_cast<T>(rng.truncated_normal(0.02));
    }
    params.add(e.name, std::move(t));
  }
}

template <typename T>
ParamStore<T> init_params(const ViTConfig& config, std::uint64_t seed) {
  ParamStore<T> params;
  add_encoder_params(params, config, seed);
  return params;
}

template <typename T>
EncoderOutput<T> forward(const ParamStore<T>& params, const Tensor<T>& images, const ViTConfig& config,
                         bool capture) {
  config.validate();
  check_params(params, config);
  Tensor<T> batch = images.rank() == 3 ? images.reshaped({1, images.dim(0), images.dim(1), images.dim(2)}) : images;
  if (batch.rank() != 4 || batch.dim(1) != static_cast<std::size_t>(config.in_channels) ||
      batch.dim(2) != static_cast<std::size_t>(config.image_size) ||
      batch.dim(3) != static_cast<std::size_t>(config.image_size)) {
    throw ShapeError("vit::forward: input " + diff::shape_str(images.shape()) + " does not match config (" +
                     std::to_string(config.in_channels) + " x " + std::to_string(config.image_size) + " x " +
                     std::to_string(config.image_size) + ")");
  }
  const std::size_t n = batch.dim(0);
  const std::size_t d = static_cast<std::size_t>(config.embed_dim);
  const std::size_t np = static_cast<std::size_t>(config.num_patches());
  const std::size_t t = np + 1;
  const std::size_t heads = static_cast<std::size_t>(config.heads);
  const std::size_t hd = static_cast<std::size_t>(config.head_dim());

  auto patches = Var<T>::constant(patchify_batch(batch, config.patch_size));
  Var<T> x = linear(patches, params, pname("patch_embed"));  // N x P x D

  auto cls = diff::add(Var<T>::constant(Tensor<T>(Shape{n, 1, d}, T{0})), params.get(pname("cls_token")));
  x = diff::concat<T>({cls, x}, 1);  // N x T x D

  const Var<T>& pos = params.get(pname("pos_embed"));
  Var<T> pos_active;
  if (static_cast<std::size_t>(config.pos_tokens()) == t) {
    pos_active = diff::reshape(pos, {t, d});
  } else {
    const std::size_t p0 = static_cast<std::size_t>(config.pos_tokens()) - 1;
    auto cls_pos = diff::reshape(diff::slice(pos, 1, 0, 1), {1, d});
    auto grid_pos = diff::reshape(diff::slice(pos, 1, 1, p0), {p0, d});
    auto resample = Var<T>::constant(grid_resample_matrix<T>(config.pos_grid(), config.grid()));
    pos_active = diff::concat<T>({cls_pos, diff::matmul(resample, grid_pos)}, 0);
  }
  x = diff::add(x, pos_active);

  EncoderOutput<T> out;
  out.captured = capture;
  const T attn_scale = T{1} / std::sqrt(static_cast<T>(hd));
  for (int b = 0; b < config.depth; ++b) {
    auto h = norm(x, params, bname(b, "norm1"));
    auto qkv = linear(h, params, bname(b, "attn.qkv"));  // N x T x 3D
    qkv = diff::permute(diff::reshape(qkv, {n, t, 3, heads, hd}), {2, 0, 3, 1, 4});
    auto q = diff::reshape(diff::slice(qkv, 0, 0, 1), {n, heads, t, hd});
    auto k = diff::reshape(diff::slice(qkv, 0, 1, 1), {n, heads, t, hd});
    auto v = diff::reshape(diff::slice(qkv, 0, 2, 1), {n, heads, t, hd});
    auto attn = diff::softmax(diff::scale(diff::matmul(q, diff::transpose(k)), attn_scale));
    if (capture && b == config.depth - 1) out.attention = attn.value();
    auto mixed = diff::reshape(diff::permute(diff::matmul(attn, v), {0, 2, 1, 3}), {n, t, d});
    x = diff::add(x, linear(mixed, params, bname(b, "attn.proj")));

    auto h2 = norm(x, params, bname(b, "norm2"));
    auto act = diff::gelu(linear(h2, params, bname(b, "mlp.fc1")));
    if (capture) out.mlp_activations.push_back(act.value());
    x = diff::add(x, linear(act, params, bname(b, "mlp.fc2")));
  }
  x = norm(x, params, pname("norm"));
  out.representation = diff::reshape(diff::slice(x, 1, 0, 1), {n, d});
  return out;
}

template <typename T>
std::vector<Tensor<T>> attention_maps(const EncoderOutput<T>& output, const ViTConfig& config, std::size_t sample) {
  if (!output.captured || output.attention.rank() != 4) {
    throw ContractError("attention_maps: encoder output was produced without capture");
  }
  const Tensor<T>& a = output.attention;
  const std::size_t heads = a.dim(1), t = a.dim(2);
  if (sample >= a.dim(0)) throw ContractError("attention_maps: sample index out of range");
  const std::size_t g = static_cast<std::size_t>(config.grid());
  if (g * g + 1 != t) throw ContractError("attention_maps: config grid does not match captured attention");
  std::vector<Tensor<T>> maps;
  for (std::size_t h = 0; h < heads; ++h) {
    const T* row = a.ptr() + ((sample * heads + h) * t) * t;  // CLS query row
    Tensor<T> m(Shape{g, g});
    T total{0};
    for (std::size_t i = 0; i < g * g; ++i) total += row[1 + i];
    for (std::size_t i = 0; i < g * g; ++i) {
      m[i] = total > T{0} ? row[1 + i] / total : T{1} / static_cast<T>(g * g);
    }
    maps.push_back(std::move(m));
  }
  return maps;
}

#define TOVREG_INSTANTIATE_VIT(T)                                                                          \
  template Tensor<T> patchify(const Tensor<T>&, int);                                                      \
  template Tensor<T> patchify_batch(const Tensor<T>&, int);                                                \
  template Tensor<T> grid_resample_matrix<T>(int, int);                                                    \
  template void check_params(const ParamStore<T>&, const ViTConfig&);                                      \
  template void add_encoder_params(ParamStore<T>&, const ViTConfig&, std::uint64_t);                        \
  template ParamStore<T> init_params<T>(const ViTConfig&, std::uint64_t);                                  \
  template EncoderOutput<T> forward(const ParamStore<T>&, const Tensor<T>&, const ViTConfig&, bool);       \
  template std::vector<Tensor<T>> attention_maps(const EncoderOutput<T>&, const ViTConfig&, std::size_t);

TOVREG_INSTANTIATE_VIT(float)
TOVREG_INSTANTIATE_VIT(double)

#undef TOVREG_INSTANTIATE_VIT

}  // namespace tovreg::vit
