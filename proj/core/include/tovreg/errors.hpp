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
#include <stdexcept>
#include <string>

namespace tovreg {

// Violated precondition of a documented operation.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Operand shapes that an operation cannot combine. The message names the
// operation and both shapes.
class ShapeError : public ContractError {
 public:
  using ContractError::ContractError;
};

// Input outside the mathematical domain of an operation (sqrt of a negative,
// log of a non-positive value).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Malformed binary container. `offset` is the byte position where parsing
// stopped.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// Invalid run configuration. `key` names the offending setting.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error(key + ": " + what), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

// Non-finite value produced during training or evaluation.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tovreg
