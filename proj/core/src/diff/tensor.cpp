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

#include "tovreg/diff/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "tovreg/errors.hpp"

namespace tovreg::diff {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

template <typename T>
Tensor<T>::Tensor(Shape shape, T fill) : shape_(std::move(shape)) {
  for (std::size_t e : shape_) {
    if (e == 0) throw ShapeError("Tensor: zero extent in shape " + shape_str(shape_));
  }
  data_.assign(shape_size(shape_), fill);
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
  for (std::size_t e : shape_) {
    if (e == 0) throw ShapeError("Tensor: zero extent in shape " + shape_str(shape_));
  }
  if (shape_size(shape_) != data_.size()) {
    throw ShapeError("Tensor: shape " + shape_str(shape_) + " does not match " +
                     std::to_string(data_.size()) + " values");
  }
}

template <typename T>
Tensor<T> Tensor<T>::reshaped(Shape shape) const {
  if (shape_size(shape) != data_.size()) {
    throw ShapeError("reshape: cannot view " + shape_str(shape_) + " as " + shape_str(shape));
  }
  return Tensor(std::move(shape), data_);
}

template <typename T>
void Tensor<T>::fill(T value) {
  std::fill(data_.begin(), data_.end(), value);
}

template <typename T>
bool Tensor<T>::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
}

template <typename T>
std::size_t Tensor<T>::offset(std::initializer_list<std::size_t> index) const {
  if (index.size() != shape_.size()) {
    throw ShapeError("Tensor::at: rank " + std::to_string(index.size()) + " index into " +
                     shape_str(shape_));
  }
  std::size_t off = 0;
  std::size_t axis = 0;
  for (std::size_t i : index) {
    if (i >= shape_[axis]) {
      throw ShapeError("Tensor::at: index out of range for " + shape_str(shape_));
    }
    off = off * shape_[axis] + i;
    ++axis;
  }
  return off;
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace tovreg::diff
