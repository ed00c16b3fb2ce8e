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
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace tovreg::diff {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_str(const Shape& shape);

// Dense row-major array. Rank 0 (empty shape) holds a single scalar.
//
// Invariant: shape_size(shape()) == size().
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() : data_(1, T{0}) {}
  explicit Tensor(Shape shape, T fill = T{0});
  Tensor(Shape shape, std::vector<T> data);

  static Tensor scalar(T value) { return Tensor(Shape{}, std::vector<T>{value}); }
  static Tensor from(std::initializer_list<std::size_t> shape, std::initializer_list<T> values) {
    return Tensor(Shape(shape), std::vector<T>(values));
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  T* ptr() noexcept { return data_.data(); }
  const T* ptr() const noexcept { return data_.data(); }

  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  // Multi-index access; bounds-checked.
  T& at(std::initializer_list<std::size_t> index) { return data_[offset(index)]; }
  const T& at(std::initializer_list<std::size_t> index) const { return data_[offset(index)]; }

  // First element; the value of a scalar tensor.
  T item() const { return data_.front(); }

  Tensor reshaped(Shape shape) const;

  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> out(data_.size());
    for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
    return Tensor<U>(shape_, std::move(out));
  }

  void fill(T value);
  bool all_finite() const;

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  std::size_t offset(std::initializer_list<std::size_t> index) const;

  Shape shape_;
  std::vector<T> data_;
};

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace tovreg::diff
