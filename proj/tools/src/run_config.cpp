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

#include "tovreg/cli/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "tovreg/errors.hpp"

namespace tovreg::cli {

using json = nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <typename I>
I parse_integer(const std::string& key, const std::string& v) {
  I out{};
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end || v.empty()) throw ConfigError(key, "expected an integer, got '" + v + "'");
  return out;
}

int parse_int(const std::string& key, const std::string& v) { return parse_integer<int>(key, v); }
std::size_t parse_size(const std::string& key, const std::string& v) { return parse_integer<std::size_t>(key, v); }
std::uint64_t parse_u64(const std::string& key, const std::string& v) { return parse_integer<std::uint64_t>(key, v); }

double parse_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (v.empty() || used != v.size()) throw ConfigError(key, "expected a number, got '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key, "expected true or false, got '" + v + "'");
}

std::vector<std::string> split(const std::string& v, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(v);
  while (std::getline(in, cur, sep)) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

std::vector<int> parse_widths(const std::string& key, const std::string& v) {
  std::vector<int> out;
  for (const auto& part : split(v, '-')) out.push_back(parse_int(key, part));
  if (out.empty()) throw ConfigError(key, "expected widths such as 1024-1024-1024");
  return out;
}

std::string widths_str(const std::vector<int>& w) {
  std::string s;
  for (std::size_t i = 0; i < w.size(); ++i) s += (i ? "-" : "") + std::to_string(w[i]);
  return s;
}

std::vector<std::filesystem::path> parse_paths(const std::string& v) {
  std::vector<std::filesystem::path> out;
  for (const auto& p : split(v, ',')) out.emplace_back(p);
  return out;
}

json paths_json(const std::vector<std::filesystem::path>& paths) {
  json arr = json::array();
  for (const auto& p : paths) arr.push_back(p.string());
  return arr;
}

struct Field {
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<json(const RunConfig&)> get;
};

#define TOVREG_FIELD(KEY, PARSE, MEMBER)                                                         \
  {                                                                                              \
    KEY, Field {                                                                                 \
      [](RunConfig& c, const std::string& k, const std::string& v) { c.MEMBER = PARSE(k, v); }, \
          [](const RunConfig& c) { return json(c.MEMBER); }                                      \
    }                                                                                            \
  }

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = {
      TOVREG_FIELD("seed", parse_u64, seed),
      TOVREG_FIELD("threads", parse_int, threads),
      {"out", {[](RunConfig& c, const std::string&, const std::string& v) { c.out = v; },
               [](const RunConfig& c) { return json(c.out.string()); }}},
      {"data", {[](RunConfig& c, const std::string&, const std::string& v) { c.data = parse_paths(v); },
                [](const RunConfig& c) { return paths_json(c.data); }}},
      {"checkpoints",
       {[](RunConfig& c, const std::string&, const std::string& v) { c.checkpoints = parse_paths(v); },
        [](const RunConfig& c) { return paths_json(c.checkpoints); }}},
      {"scores", {[](RunConfig& c, const std::string&, const std::string& v) { c.scores = v; },
                  [](const RunConfig& c) { return json(c.scores.string()); }}},

      TOVREG_FIELD("vit.image_size", parse_int, vit.image_size),
      TOVREG_FIELD("vit.patch_size", parse_int, vit.patch_size),
      TOVREG_FIELD("vit.in_channels", parse_int, vit.in_channels),
      TOVREG_FIELD("vit.embed_dim", parse_int, vit.embed_dim),
      TOVREG_FIELD("vit.depth", parse_int, vit.depth),
      TOVREG_FIELD("vit.heads", parse_int, vit.heads),
      TOVREG_FIELD("vit.mlp_ratio", parse_int, vit.mlp_ratio),
      {"vit.pos_table",
       {[](RunConfig& c, const std::string& k, const std::string& v) {
          c.vit.pos_table_tokens = v == "grid" ? 0 : parse_int(k, v);
          if (c.vit.pos_table_tokens <= 0 && v != "grid") throw ConfigError(k, "expected grid or a token count");
        },
        [](const RunConfig& c) {
          return c.vit.pos_table_tokens == 0 ? json("grid") : json(std::to_string(c.vit.pos_table_tokens));
        }}},

      TOVREG_FIELD("ssl.inv_coef", parse_double, ssl.inv_coef),
      TOVREG_FIELD("ssl.var_coef", parse_double, ssl.var_coef),
      TOVREG_FIELD("ssl.cov_coef", parse_double, ssl.cov_coef),
      TOVREG_FIELD("ssl.temp_coef", parse_double, ssl.temp_coef),
      TOVREG_FIELD("ssl.gamma", parse_double, ssl.gamma),
      {"ssl.expander",
       {[](RunConfig& c, const std::string& k, const std::string& v) { c.ssl.expander = parse_widths(k, v); },
        [](const RunConfig& c) { return json(widths_str(c.ssl.expander)); }}},
      TOVREG_FIELD("ssl.base_lr", parse_double, ssl.base_lr),
      TOVREG_FIELD("ssl.weight_decay", parse_double, ssl.weight_decay),
      TOVREG_FIELD("ssl.momentum", parse_double, ssl.momentum),
      TOVREG_FIELD("ssl.lars", parse_bool, ssl.lars),
      TOVREG_FIELD("ssl.epochs", parse_int, ssl.epochs),
      TOVREG_FIELD("ssl.warmup_epochs", parse_int, ssl.warmup_epochs),
      TOVREG_FIELD("ssl.batch_size", parse_int, ssl.batch_size),
      TOVREG_FIELD("ssl.augment", parse_bool, ssl.augment),

      TOVREG_FIELD("probe.epochs", parse_int, probe.epochs),
      TOVREG_FIELD("probe.batch_size", parse_int, probe.batch_size),
      TOVREG_FIELD("probe.lr", parse_double, probe.lr),
      TOVREG_FIELD("probe.n_actions", parse_int, probe.n_actions),
      TOVREG_FIELD("probe.freeze_encoder", parse_bool, probe.freeze_encoder),
      {"probe.f1",
       {[](RunConfig& c, const std::string&, const std::string& v) { c.probe.f1_average = probe::parse_f1_average(v); },
        [](const RunConfig& c) { return json(probe::to_string(c.probe.f1_average)); }}},
      TOVREG_FIELD("probe.train_n", parse_size, probe_train_n),
      TOVREG_FIELD("probe.test_n", parse_size, probe_test_n),
      TOVREG_FIELD("probe.feature_cache", parse_bool, probe_feature_cache),

      TOVREG_FIELD("diagnose.sample_n", parse_size, diagnose.sample_n),
      TOVREG_FIELD("diagnose.similarity_m", parse_size, diagnose.similarity_m),
      TOVREG_FIELD("diagnose.sparsity_tol", parse_double, diagnose.sparsity_tol),
      TOVREG_FIELD("diagnose.batch_size", parse_size, diagnose.batch_size),

      {"synthetic.kind",
       {[](RunConfig& c, const std::string&, const std::string& v) {
          c.synthetic.kind = data::parse_synthetic_kind(v);
        },
        [](const RunConfig& c) { return json(data::to_string(c.synthetic.kind)); }}},
      TOVREG_FIELD("synthetic.episodes", parse_int, synthetic.episodes),
      TOVREG_FIELD("synthetic.frames", parse_int, synthetic.frames_per_episode),
      TOVREG_FIELD("synthetic.image_size", parse_int, synthetic.image_size),
      TOVREG_FIELD("synthetic.channels", parse_int, synthetic.channels),

      TOVREG_FIELD("gradcheck.batch", parse_size, gradcheck_batch),
      TOVREG_FIELD("gradcheck.eps", parse_double, gradcheck_eps),
      TOVREG_FIELD("gradcheck.tol", parse_double, gradcheck_tol),
  };
  return table;
}

#undef TOVREG_FIELD

void flatten(const json& j, const std::string& prefix, Assignments& out) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    const json& v = it.value();
    if (v.is_object()) {
      flatten(v, key, out);
    } else if (v.is_string()) {
      out.emplace_back(key, v.get<std::string>());
    } else if (v.is_array()) {
      std::string joined;
      for (std::size_t i = 0; i < v.size(); ++i) {
        joined += (i ? "," : "") + (v[i].is_string() ? v[i].get<std::string>() : v[i].dump());
      }
      out.emplace_back(key, joined);
    } else {
      out.emplace_back(key, v.dump());
    }
  }
}

}  // namespace

RunConfig defaults_for(const std::string& command) {
  if (std::find(kCommands.begin(), kCommands.end(), command) == kCommands.end()) {
    throw ConfigError("command", "unknown command '" + command + "'");
  }
  RunConfig c;
  c.command = command;
  if (command == "gradcheck") {
    c.vit.image_size = 16;
    c.vit.patch_size = 4;
    c.vit.depth = 2;
    c.vit.embed_dim = 32;
    c.vit.heads = 2;
    c.ssl.expander = {64, 64, 64};
  }
  return c;
}

Assignments parse_config_text(const std::string& text) {
  Assignments out;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::exception& e) {
      throw ConfigError("config", e.what());
    }
    if (!j.is_object()) throw ConfigError("config", "JSON config must be an object");
    flatten(j, "", out);
    return out;
  }
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config", "line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("config", "line " + std::to_string(lineno) + ": empty key");
    out.emplace_back(key, trim(line.substr(eq + 1)));
  }
  return out;
}

Assignments read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void apply(RunConfig& config, const std::string& key, const std::string& value) {
  if (key == "command") {
    if (value != config.command) throw ConfigError(key, "config was resolved for '" + value + "'");
    return;
  }
  const auto& table = fields();
  const auto it = table.find(key);
  if (it == table.end()) throw ConfigError(key, "unknown key");
  it->second.set(config, key, value);
}

void RunConfig::validate() const {
  if (threads < 1) throw ConfigError("threads", "must be >= 1");
  vit.validate();
  ssl.validate();
  probe.validate();
  if (diagnose.sample_n < 3) throw ConfigError("diagnose.sample_n", "must be >= 3");
  if (diagnose.similarity_m < 1) throw ConfigError("diagnose.similarity_m", "must be >= 1");
  if (!(diagnose.sparsity_tol >= 0.0)) throw ConfigError("diagnose.sparsity_tol", "must be >= 0");
  if (diagnose.batch_size < 1) throw ConfigError("diagnose.batch_size", "must be >= 1");
  if (synthetic.episodes < 1) throw ConfigError("synthetic.episodes", "must be >= 1");
  if (synthetic.frames_per_episode < 1) throw ConfigError("synthetic.frames", "must be >= 1");
  if (synthetic.image_size < 8 || synthetic.image_size > 0xFFFF) {
    throw ConfigError("synthetic.image_size", "must be in [8, 65535]");
  }
  if (synthetic.channels < 1 || synthetic.channels > 255) throw ConfigError("synthetic.channels", "must be in [1, 255]");
  if (gradcheck_batch < 2) throw ConfigError("gradcheck.batch", "must be >= 2");
  if (!(gradcheck_eps > 0.0)) throw ConfigError("gradcheck.eps", "must be > 0");
  if (!(gradcheck_tol > 0.0)) throw ConfigError("gradcheck.tol", "must be > 0");
}

RunConfig resolve_config(const std::string& command, const Assignments& file, const Assignments& flags) {
  RunConfig c = defaults_for(command);
  for (const auto& [k, v] : file) apply(c, k, v);
  for (const auto& [k, v] : flags) apply(c, k, v);
  c.validate();
  return c;
}

std::string resolved_json(const RunConfig& config) {
  json j = json::object();
  j["command"] = config.command;
  for (const auto& [key, field] : fields()) {
    const auto dot = key.find('.');
    if (dot == std::string::npos) {
      j[key] = field.get(config);
    } else {
      j[key.substr(0, dot)][key.substr(dot + 1)] = field.get(config);
    }
  }
  return j.dump(2) + "\n";
}

std::vector<std::string> known_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, f] : fields()) keys.push_back(k);
  return keys;
}

}  // namespace tovreg::cli
