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

#include "tovreg/data/store.hpp"

#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include "tovreg/errors.hpp"

namespace tovreg::data {

std::size_t ObservationStore::total_frames() const {
  std::size_t n = 0;
  for (const auto& ep : episodes) n += ep.n_frames;
  return n;
}

std::vector<std::size_t> ObservationStore::episode_lengths() const {
  std::vector<std::size_t> out;
  out.reserve(episodes.size());
  for (const auto& ep : episodes) out.push_back(ep.n_frames);
  return out;
}

std::span<const std::uint8_t> ObservationStore::frame(std::size_t e, std::size_t t) const {
  const Episode& ep = episodes.at(e);
  if (t >= ep.n_frames) throw ContractError("frame index out of range");
  return std::span<const std::uint8_t>(ep.frames).subspan(t * frame_bytes(), frame_bytes());
}

int ObservationStore::action(std::size_t e, std::size_t t) const {
  if (!has_actions) throw ContractError("store has no actions");
  const Episode& ep = episodes.at(e);
  if (t >= ep.n_frames) throw ContractError("frame index out of range");
  return ep.actions[t];
}

void ObservationStore::add_episode(std::vector<std::uint8_t> frames, std::vector<std::uint8_t> actions) {
  const std::size_t fb = frame_bytes();
  if (fb == 0 || frames.empty() || frames.size() % fb != 0) {
    throw ContractError("add_episode: frame bytes not a positive multiple of H*W*C");
  }
  Episode ep;
  ep.n_frames = frames.size() / fb;
  if (has_actions != !actions.empty() || (has_actions && actions.size() != ep.n_frames)) {
    throw ContractError("add_episode: need exactly one action per frame iff the store has actions");
  }
  ep.frames = std::move(frames);
  ep.actions = std::move(actions);
  episodes.push_back(std::move(ep));
}

void ObservationStore::validate() const {
  if (height <= 0 || width <= 0 || channels <= 0 || height > 0xFFFF || width > 0xFFFF || channels > 0xFF) {
    throw ContractError("store extents out of range");
  }
  for (std::size_t e = 0; e < episodes.size(); ++e) {
    const Episode& ep = episodes[e];
    if (ep.n_frames == 0) throw ContractError("episode " + std::to_string(e) + " is empty");
    if (ep.frames.size() != ep.n_frames * frame_bytes()) {
      throw ContractError("episode " + std::to_string(e) + " frame bytes do not match its length");
    }
    if (has_actions ? ep.actions.size() != ep.n_frames : !ep.actions.empty()) {
      throw ContractError("episode " + std::to_string(e) + " action count does not match");
    }
  }
}

augment::Image frame_image(const ObservationStore& store, std::size_t e, std::size_t t) {
  const auto raw = store.frame(e, t);
  const int H = store.height, W = store.width, C = store.channels;
  augment::Image img = augment::make_image(C, H, W);
  float* out = img.ptr();
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      for (int c = 0; c < C; ++c) {
        out[(static_cast<std::size_t>(c) * H + y) * W + x] =
            static_cast<float>(raw[(static_cast<std::size_t>(y) * W + x) * C + c]) / 255.0f;
      }
    }
  }
  return img;
}

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) {
    u8(static_cast<std::uint8_t>(v));
    u8(static_cast<std::uint8_t>(v >> 8));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void bytes(std::span<const std::uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }
  std::vector<std::uint8_t> take() { return std::move(buf_); }

 private:
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return b_.size() - pos_; }

  void need(std::size_t n, const char* what) const {
    if (remaining() < n) throw FormatError(std::string("truncated ") + what, pos_);
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return b_[pos_++];
  }
  std::uint16_t u16(const char* what) {
    need(2, what);
    const std::uint16_t v = static_cast<std::uint16_t>(b_[pos_] | (b_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::span<const std::uint8_t> bytes(std::size_t n, const char* what) {
    need(n, what);
    auto out = b_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

 private:
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_store(const ObservationStore& store) {
  store.validate();
  if (store.episodes.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw ContractError("too many episodes for the OBSV format");
  }
  Writer w;
  w.bytes(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>("OBSV"), 4));
  w.u8(kStoreVersion);
  w.u8(store.has_actions ? 1 : 0);
  w.u16(static_cast<std::uint16_t>(store.height));
  w.u16(static_cast<std::uint16_t>(store.width));
  w.u8(static_cast<std::uint8_t>(store.channels));
  w.u8(0);
  w.u32(static_cast<std::uint32_t>(store.episodes.size()));
  for (const Episode& ep : store.episodes) {
    if (ep.n_frames > std::numeric_limits<std::uint32_t>::max()) throw ContractError("episode too long for OBSV");
    w.u32(static_cast<std::uint32_t>(ep.n_frames));
    w.bytes(ep.frames);
    if (store.has_actions) w.bytes(ep.actions);
  }
  return w.take();
}

ObservationStore decode_store(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  const auto magic = r.bytes(4, "magic");
  for (std::size_t i = 0; i < 4; ++i) {
    if (magic[i] != static_cast<std::uint8_t>("OBSV"[i])) throw FormatError("bad magic", i);
  }
  if (r.u8("version") != kStoreVersion) throw FormatError("unsupported version", 4);
  const std::uint8_t flags = r.u8("flags");
  if (flags & ~std::uint8_t{1}) throw FormatError("unknown flag bits", 5);
  ObservationStore store;
  store.has_actions = (flags & 1) != 0;
  store.height = r.u16("height");
  store.width = r.u16("width");
  store.channels = r.u8("channels");
  if (store.height == 0) throw FormatError("zero height", 6);
  if (store.width == 0) throw FormatError("zero width", 8);
  if (store.channels == 0) throw FormatError("zero channels", 10);
  if (r.u8("reserved") != 0) throw FormatError("reserved byte not zero", 11);
  const std::uint32_t n_episodes = r.u32("episode count");
  const std::size_t fb = store.frame_bytes();
  // Every episode takes at least its length field and one frame.
  if (n_episodes > r.remaining() / (4 + fb)) throw FormatError("episode count exceeds payload", 12);
  store.episodes.reserve(n_episodes);
  for (std::uint32_t e = 0; e < n_episodes; ++e) {
    const std::size_t at = r.pos();
    const std::uint32_t n = r.u32("episode length");
    if (n == 0) throw FormatError("empty episode", at);
    const std::size_t per_frame = fb + (store.has_actions ? 1 : 0);
    if (n > r.remaining() / per_frame) throw FormatError("truncated episode payload", r.pos());
    Episode ep;
    ep.n_frames = n;
    const auto frames = r.bytes(n * fb, "frames");
    ep.frames.assign(frames.begin(), frames.end());
    if (store.has_actions) {
      const auto actions = r.bytes(n, "actions");
      ep.actions.assign(actions.begin(), actions.end());
    }
    store.episodes.push_back(std::move(ep));
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes", r.pos());
  return store;
}

void write_store(const std::filesystem::path& path, const ObservationStore& store) {
  const auto bytes = encode_store(store);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

ObservationStore read_store(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_store(bytes);
}

}  // namespace tovreg::data
