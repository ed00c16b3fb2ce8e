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

#include <ostream>
#include <string>
#include <vector>

#include "tovreg/cli/run_config.hpp"

namespace tovreg::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfigError = 2,
  kFormatError = 3,
  kNumericalError = 4,
};

struct Outcome {
  std::string summary;  // one line of JSON; for param-count the bare count
  int code = kOk;       // kNumericalError when a gradient check fails
};

// Runs the resolved command, writing its artifacts under config.out (every
// command but param-count also writes resolved_config.json there). Throws
// the library's error types.
Outcome execute(const RunConfig& config);

// Parses `args` (without the program name), resolves the configuration,
// executes, prints the summary line on `out`, and maps errors to exit codes
// with a message on `err`. The TOV_OUT environment variable is the default
// for --out.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tovreg::cli
