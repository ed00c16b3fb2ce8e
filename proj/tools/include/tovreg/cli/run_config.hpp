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
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "tovreg/data/synthetic.hpp"
#include "tovreg/metrics/diagnose.hpp"
#include "tovreg/probe/probe.hpp"
#include "tovreg/ssl/trainer.hpp"
#include "tovreg/vit/config.hpp"

namespace tovreg::cli {

inline const std::vector<std::string> kCommands = {"pretrain",      "probe",      "diagnose",
                                                   "gradcheck",     "gen-synthetic", "param-count"};

// Fully resolved settings for one command. Defaults come from the library
// configs, except that `gradcheck` starts from a small model (16-pixel
// images, patch 4, 2 blocks of width 32 with 2 heads, expander 64-64-64,
// batch 4) so that every entry can be checked.
struct RunConfig {
  std::string command;
  std::uint64_t seed = 0;
  int threads = 1;
  std::filesystem::path out = "tovreg_out";
  std::vector<std::filesystem::path> data;
  std::vector<std::filesystem::path> checkpoints;
  std::filesystem::path scores;

  vit::ViTConfig vit;
  ssl::SSLConfig ssl;

  probe::ProbeConfig probe;
  std::size_t probe_train_n = 0;  // 0: 80% of the frames
  std::size_t probe_test_n = 0;   // 0: the remaining frames
  bool probe_feature_cache = false;

  metrics::DiagnoseOptions diagnose;
  data::SyntheticOptions synthetic;

  std::size_t gradcheck_batch = 4;
  double gradcheck_eps = 1e-5;
  double gradcheck_tol = 1e-4;

  // Throws ConfigError naming the first invalid key.
  void validate() const;
};

RunConfig defaults_for(const std::string& command);

// Ordered key = value assignments. Later assignments win.
using Assignments = std::vector<std::pair<std::string, std::string>>;

// Flat text: one `key = value` per line, `#` starts a comment, blank lines
// ignored. A file whose first non-blank character is '{' is read as JSON
// (the resolved_config.json format) and flattened into dotted keys.
// Throws ConfigError on malformed lines.
Assignments parse_config_text(const std::string& text);
Assignments read_config_file(const std::filesystem::path& path);

// Applies one assignment; throws ConfigError on an unknown key or a value of
// the wrong type.
void apply(RunConfig& config, const std::string& key, const std::string& value);

// defaults_for(command), then file assignments, then flag assignments, then
// validation.
RunConfig resolve_config(const std::string& command, const Assignments& file, const Assignments& flags);

// Every key with its resolved value, nested by section.
std::string resolved_json(const RunConfig& config);

// Keys accepted by apply(), sorted.
std::vector<std::string> known_keys();

}  // namespace tovreg::cli
