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

#include "tovreg/diff/param_store.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "tovreg/errors.hpp"

namespace tovreg::diff {

template <typename T>
Var<T>& ParamStore<T>::add(const std::string& name, Tensor<T> init, bool trainable) {
  if (index_.contains(name)) throw ContractError("ParamStore: duplicate parameter '" + name + "'");
  index_.emplace(name, entries_.size());
  entries_.push_back(Entry{name, Var<T>::leaf(std::move(init), trainable), trainable});
  return entries_.back().var;
}

template <typename T>
const Var<T>& ParamStore<T>::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("ParamStore: missing parameter '" + name + "'");
  return entries_[it->second].var;
}

template <typename T>
Var<T>& ParamStore<T>::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("ParamStore: missing parameter '" + name + "'");
  return entries_[it->second].var;
}

template <typename T>
std::size_t ParamStore<T>::trainable_count() const {
  std::size_t n = 0;
  for (const Entry& e : entries_) {
    if (e.trainable) n += e.var.size();
  }
  return n;
}

template <typename T>
void ParamStore<T>::zero_grad() {
  for (Entry& e : entries_) e.var.zero_grad();
}

template <typename T>
ParamStore<T> ParamStore<T>::subset(const std::string& prefix) const {
  ParamStore out;
  for (const Entry& e : entries_) {
    if (e.name.starts_with(prefix)) out.add(e.name, e.var.value(), e.trainable);
  }
  return out;
}

template <typename T>
std::uint64_t ParamStore<T>::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const Entry& e : entries_) {
    feed(e.name.data(), e.name.size());
    feed(e.var.value().ptr(), e.var.size() * sizeof(T));
  }
  return h;
}

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

class Writer {
 public:
  template <typename U>
  void put(U v) {
    unsigned char b[sizeof(U)];
    std::memcpy(b, &v, sizeof(U));
    bytes_.insert(bytes_.end(), b, b + sizeof(U));
  }
  void put_bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    bytes_.insert(bytes_.end(), b, b + n);
  }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  template <typename U>
  U get(const char* what) {
    need(sizeof(U), what);
    U v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(U));
    pos_ += sizeof(U);
    return v;
  }
  void get_bytes(void* dst, std::size_t n, const char* what) {
    need(n, what);
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n, const char* what) {
    if (remaining() < n) throw FormatError(std::string("checkpoint truncated while reading ") + what, pos_);
  }

  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const NamedTensors& tensors) {
  Writer w;
  w.put_bytes("TOVP", 4);
  w.put<std::uint16_t>(kCheckpointVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    if (name.size() > 0xFFFF) throw ContractError("checkpoint: parameter name too long: " + name);
    if (t.rank() > 0xFF) throw ContractError("checkpoint: rank too large for " + name);
    w.put<std::uint16_t>(static_cast<std::uint16_t>(name.size()));
    w.put_bytes(name.data(), name.size());
    w.put<std::uint8_t>(static_cast<std::uint8_t>(t.rank()));
    for (std::size_t e : t.shape()) w.put<std::uint32_t>(static_cast<std::uint32_t>(e));
    w.put_bytes(t.ptr(), t.size() * sizeof(float));
  }
  return w.take();
}

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const ParamStore<T>& params) {
  NamedTensors tensors;
  tensors.reserve(params.size());
  for (const auto& e : params.entries()) tensors.emplace_back(e.name, e.var.value().template cast<float>());
  const auto bytes = encode_checkpoint(tensors);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

NamedTensors decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  char magic[4];
  r.get_bytes(magic, 4, "magic");
  if (std::memcmp(magic, "TOVP", 4) != 0) throw FormatError("checkpoint: bad magic", 0);
  const auto version = r.get<std::uint16_t>("version");
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(version), 4);
  }
  const auto count = r.get<std::uint32_t>("count");
  NamedTensors out;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = r.get<std::uint16_t>("name length");
    std::string name(name_len, '\0');
    r.get_bytes(name.data(), name_len, "name");
    const std::size_t rank_at = r.pos();
    const auto rank = r.get<std::uint8_t>("rank");
    Shape shape(rank);
    std::size_t n = 1;
    for (auto& e : shape) {
      const std::size_t at = r.pos();
      e = r.get<std::uint32_t>("extent");
      if (e == 0) throw FormatError("checkpoint: zero extent in '" + name + "'", at);
      n *= e;
    }
    if (n > r.remaining() / sizeof(float)) {
      throw FormatError("checkpoint: payload of '" + name + "' exceeds file", rank_at);
    }
    std::vector<float> values(n);
    r.get_bytes(values.data(), n * sizeof(float), "values");
    out.emplace_back(std::move(name), Tensor<float>(std::move(shape), std::move(values)));
  }
  if (r.remaining() != 0) throw FormatError("checkpoint: trailing bytes", r.pos());
  return out;
}

NamedTensors read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("checkpoint: cannot open " + path.string(), 0);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

template <typename T>
void load_into(ParamStore<T>& params, const NamedTensors& tensors, bool strict) {
  std::unordered_map<std::string, const Tensor<float>*> by_name;
  for (const auto& [name, t] : tensors) by_name.emplace(name, &t);
  for (auto& e : params.entries()) {
    auto it = by_name.find(e.name);
    if (it == by_name.end()) throw ContractError("checkpoint is missing parameter '" + e.name + "'");
    if (it->second->shape() != e.var.shape()) {
      throw ContractError("parameter '" + e.name + "' has shape " + shape_str(e.var.shape()) +
                          " but checkpoint holds " + shape_str(it->second->shape()));
    }
    e.var.mutable_value() = it->second->template cast<T>();
  }
  if (strict && tensors.size() != params.size()) {
    for (const auto& [name, t] : tensors) {
      if (!params.contains(name)) throw ContractError("checkpoint has unexpected parameter '" + name + "'");
    }
  }
}

template class ParamStore<float>;
template class ParamStore<double>;
template void save_checkpoint<float>(const std::filesystem::path&, const ParamStore<float>&);
template void save_checkpoint<double>(const std::filesystem::path&, const ParamStore<double>&);
template void load_into<float>(ParamStore<float>&, const NamedTensors&, bool);
template void load_into<double>(ParamStore<double>&, const NamedTensors&, bool);

}  // namespace tovreg::diff
