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

#include <string>

// Number formatting shared by every CSV and JSON export.
namespace tovreg {

// 9 significant digits ("%.9g"); "nan", "inf", "-inf" for non-finite values.
std::string format_float(double v);

// v rounded to 9 significant digits, so that shortest-round-trip printers
// emit at most 9 digits.
double round_sig9(double v);

}  // namespace tovreg
