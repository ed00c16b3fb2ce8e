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

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tovreg/diff/var.hpp"

namespace tovreg::diff {

// Named parameter collection. Each entry is a leaf Var whose gradient buffer
// is the parameter's gradient slot. Insertion order is preserved and is the
// order used on disk.
//
// Non-trainable entries (batch-norm running statistics) are stored and
// checkpointed alongside the parameters but never receive gradients and are
// excluded from trainable_count().
template <typename T>
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Var<T> var;
    bool trainable = true;
  };

  // Throws ContractError on a duplicate name.
  Var<T>& add(const std::string& name, Tensor<T> init, bool trainable = true);

  bool contains(const std::string& name) const { return index_.contains(name); }
  // Throws ContractError naming the missing parameter.
  const Var<T>& get(const std::string& name) const;
  Var<T>& get(const std::string& name);
  const Tensor<T>& value(const std::string& name) const { return get(name).value(); }

  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::vector<Entry>& entries() noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

  // Number of trainable scalars.
  std::size_t trainable_count() const;
  void zero_grad();

  // Deep copy in another precision; gradients are not carried over.
  template <typename U>
  ParamStore<U> cast() const {
    ParamStore<U> out;
    for (const Entry& e : entries_) out.add(e.name, e.var.value().template cast<U>(), e.trainable);
    return out;
  }

  // Deep copy (fresh leaves, no gradients).
  ParamStore clone() const { return cast<T>(); }

  // Entries whose name starts with `prefix`.
  ParamStore subset(const std::string& prefix) const;

  // FNV-1a over names and raw value bytes; equal hashes for equal stores.
  std::uint64_t fingerprint() const;

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

extern template class ParamStore<float>;
extern template class ParamStore<double>;

// On-disk checkpoint, little-endian:
//   "TOVP" | version u16 | count u32 |
//   per entry: name_len u16 | name utf-8 | rank u8 | extents u32 x rank |
//              float32 values, row-major
inline constexpr std::uint16_t kCheckpointVersion = 1;

using NamedTensors = std::vector<std::pair<std::string, Tensor<float>>>;

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const ParamStore<T>& params);
std::vector<std::uint8_t> encode_checkpoint(const NamedTensors& tensors);

// Throws FormatError with the failing byte offset.
NamedTensors read_checkpoint(const std::filesystem::path& path);
NamedTensors decode_checkpoint(const std::vector<std::uint8_t>& bytes);

// Copies checkpoint values into `params`. Every entry of `params` must be
// present with a matching shape; extra checkpoint entries are ignored unless
// `strict`. Throws ContractError naming the first mismatched parameter.
template <typename T>
void load_into(ParamStore<T>& params, const NamedTensors& tensors, bool strict = false);

}  // namespace tovreg::diff
