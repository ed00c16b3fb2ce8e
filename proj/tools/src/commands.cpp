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

#include "tovreg/cli/commands.hpp"

#include <cstdlib>
#include <fstream>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <fmt/format.h>
#include <json.hpp>

#include "tovreg/data/store.hpp"
#include "tovreg/errors.hpp"
#include "tovreg/format.hpp"
#include "tovreg/metrics/collapse.hpp"
#include "tovreg/rng.hpp"

namespace tovreg::cli {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void prepare_out(const RunConfig& c) {
  fs::create_directories(c.out);
  write_text(c.out / "resolved_config.json", resolved_json(c));
}

data::ObservationStore load_store(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("data", "no such file: " + path.string());
  return data::read_store(path);
}

const fs::path& single_store(const RunConfig& c) {
  if (c.data.size() != 1) throw ConfigError("data", c.command + " needs exactly one --data store");
  return c.data.front();
}

double r9(double v) { return round_sig9(v); }

json loss_json(const ssl::LossReport& r) {
  return {{"inv", r9(r.inv)}, {"var", r9(r.var)}, {"cov", r9(r.cov)}, {"temp", r9(r.temp)}, {"total", r9(r.total)}};
}

Outcome run_pretrain(const RunConfig& c) {
  const auto store = load_store(single_store(c));
  prepare_out(c);
  const auto result = ssl::pretrain(store, c.vit, c.ssl, c.seed, {c.out, {}});
  json s = {{"command", "pretrain"},
            {"epochs", c.ssl.epochs},
            {"steps", result.log.size()},
            {"batch", result.batch_size},
            {"final", loss_json(result.log.back().loss)},
            {"checkpoint", result.checkpoints.back().string()}};
  return {s.dump()};
}

Outcome run_probe(const RunConfig& c) {
  if (c.data.empty()) throw ConfigError("data", "probe needs at least one --data store");
  if (c.checkpoints.empty()) throw ConfigError("checkpoints", "probe needs at least one --checkpoint");
  prepare_out(c);
  std::vector<probe::ProbeRow> rows;
  std::ofstream curve(c.out / "probe_loss.csv", std::ios::trunc);
  curve << "store,checkpoint,epoch,loss\n";
  for (const auto& ckpt : c.checkpoints) {
    if (!fs::exists(ckpt)) throw ConfigError("checkpoints", "no such file: " + ckpt.string());
    const auto model = ssl::load_model(ckpt);
    for (const auto& store_path : c.data) {
      const auto store = load_store(store_path);
      const std::size_t total = store.total_frames();
      const std::size_t train_n = c.probe_train_n ? c.probe_train_n : total * 4 / 5;
      const std::size_t test_n = c.probe_test_n ? c.probe_test_n : total - std::min(total, train_n);
      Rng split_rng(substream(c.seed, streams::kSplit));
      const auto [train, test] = data::probe_split(store, train_n, test_n, split_rng);
      if (test.frames.empty()) throw ConfigError("probe.test_n", "test split is empty");

      probe::ProbeConfig pc = c.probe;
      pc.seed = c.seed;
      if (pc.n_actions == 0) {
        std::vector<int> all = train.labels;
        all.insert(all.end(), test.labels.begin(), test.labels.end());
        pc.n_actions = probe::infer_classes(all, 0);
      }
      const auto run = probe::train_probe(model.params, model.info.vit, store, train, pc);
      const std::string store_name = store_path.stem().string();
      const std::string ckpt_name = ckpt.stem().string();
      for (std::size_t e = 0; e < run.training.loss_curve.size(); ++e) {
        curve << store_name << ',' << ckpt_name << ',' << (e + 1) << ','
              << format_float(run.training.loss_curve[e]) << '\n';
      }
      for (const auto* split : {&train, &test}) {
        const auto feats = metrics::encode_frames(run.encoder, model.info.vit, store, split->frames);
        const auto pred = run.training.probe.predict(feats.cast<double>());
        const auto f1 = probe::evaluate_f1(pred, split->labels, pc.n_actions);
        const std::string split_name = split == &train ? "train" : "test";
        rows.push_back({store_name, ckpt_name, model.info.epoch, split_name, f1.macro, f1.weighted, f1.accuracy});
        if (c.probe_feature_cache) {
          probe::write_feature_cache(c.out / fmt::format("features_{}_{}_{}.bin", store_name, ckpt_name, split_name),
                                     feats);
        }
      }
    }
  }
  probe::write_probe_results(c.out / "probe_results.csv", rows);

  const auto means = probe::checkpoint_f1_means(rows, c.probe.f1_average);
  double mean_f1 = 0.0;
  for (double m : means) mean_f1 += m / static_cast<double>(means.size());
  json s = {{"command", "probe"},
            {"rows", rows.size()},
            {"f1_average", probe::to_string(c.probe.f1_average)},
            {"test_f1", r9(mean_f1)},
            {"pearson", nullptr}};
  if (!c.scores.empty()) {
    if (!fs::exists(c.scores)) throw ConfigError("scores", "no such file: " + c.scores.string());
    const double r = probe::probe_pearson(rows, probe::read_score_csv(c.scores), c.probe.f1_average);
    s["pearson"] = r9(r);
    write_text(c.out / "pearson.json", json({{"pearson", r9(r)}, {"checkpoints", means.size()}}).dump(2) + "\n");
  }
  return {s.dump()};
}

Outcome run_diagnose(const RunConfig& c) {
  const auto store = load_store(single_store(c));
  if (c.checkpoints.size() > 1) throw ConfigError("checkpoints", "diagnose takes at most one --checkpoint");
  prepare_out(c);
  diff::ParamStore<float> params;
  vit::ViTConfig vit = c.vit;
  if (c.checkpoints.empty()) {
    params = ssl::init_model<float>(c.vit, c.ssl, c.seed);
  } else {
    if (!fs::exists(c.checkpoints.front())) {
      throw ConfigError("checkpoints", "no such file: " + c.checkpoints.front().string());
    }
    auto model = ssl::load_model(c.checkpoints.front());
    params = std::move(model.params);
    vit = model.info.vit;
  }
  metrics::DiagnoseOptions opts = c.diagnose;
  opts.seed = c.seed;
  const auto bundle = metrics::diagnose(params, vit, store, opts);
  metrics::write_diagnostics(bundle, c.out);
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < bundle.singular_values.size(); ++i) rank += bundle.singular_values[i] > 0.0;
  json s = {{"command", "diagnose"},
            {"std", r9(bundle.std_metric)},
            {"corr", r9(bundle.corr.value)},
            {"n", bundle.n},
            {"d", bundle.d},
            {"rank", rank}};
  return {s.dump()};
}

Outcome run_gradcheck(const RunConfig& c) {
  prepare_out(c);
  diff::GradCheckOptions opts;
  opts.eps = c.gradcheck_eps;
  opts.tol = c.gradcheck_tol;
  opts.seed = c.seed;
  const auto report = ssl::check_objective_gradients(c.vit, c.ssl, c.gradcheck_batch, c.seed, opts);
  std::ofstream csv(c.out / "gradcheck.csv", std::ios::trunc);
  csv << "param,entries,max_rel_err,max_abs_grad,passed\n";
  std::size_t entries = 0;
  for (const auto& p : report.params) {
    entries += p.entries_checked;
    csv << p.name << ',' << p.entries_checked << ',' << format_float(p.max_rel_err) << ','
        << format_float(p.max_abs_analytic) << ',' << (p.passed ? "true" : "false") << '\n';
  }
  json s = {{"command", "gradcheck"},
            {"params", report.params.size()},
            {"entries", entries},
            {"max_rel_err", r9(report.max_rel_err)},
            {"passed", report.passed}};
  if (!report.passed) s["failures"] = report.failures();
  return {s.dump(), report.passed ? kOk : kNumericalError};
}

Outcome run_gen_synthetic(const RunConfig& c) {
  prepare_out(c);
  data::SyntheticOptions opts = c.synthetic;
  opts.seed = c.seed;
  const auto store = data::generate_synthetic(opts);
  const fs::path path = c.data.empty() ? c.out / (data::to_string(opts.kind) + ".obsv") : c.data.front();
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  data::write_store(path, store);
  json s = {{"command", "gen-synthetic"},
            {"path", path.string()},
            {"kind", data::to_string(opts.kind)},
            {"episodes", store.episodes.size()},
            {"frames", store.total_frames()}};
  return {s.dump()};
}

}  // namespace

Outcome execute(const RunConfig& c) {
  Eigen::setNbThreads(c.threads);
  if (c.command == "param-count") return {std::to_string(vit::param_count(c.vit))};
  if (c.command == "pretrain") return run_pretrain(c);
  if (c.command == "probe") return run_probe(c);
  if (c.command == "diagnose") return run_diagnose(c);
  if (c.command == "gradcheck") return run_gradcheck(c);
  if (c.command == "gen-synthetic") return run_gen_synthetic(c);
  throw ConfigError("command", "unknown command '" + c.command + "'");
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Self-supervised ViT pretraining, probing and representation diagnostics"};
  app.set_help_flag("-h,--help");
  std::string command;
  std::string config_path, out_dir, seed, threads, epochs, batch, patch, pos_table, cov_coef, temp_coef,
      sparsity_tol, f1, scores, depth, dim, heads, image_size, kind, episodes, frames;
  std::vector<std::string> data, checkpoints, sets;

  app.add_option("command", command, "pretrain | probe | diagnose | gradcheck | gen-synthetic | param-count")
      ->required()
      ->check(CLI::IsMember(kCommands));
  app.add_option("--config", config_path, "key = value file (or a resolved_config.json)");
  app.add_option("--out", out_dir, "output directory (default: $TOV_OUT, else tovreg_out)");
  app.add_option("--seed", seed, "global u64 seed");
  app.add_option("--threads", threads, "cap on internal parallelism");
  app.add_option("--data", data, "OBSV store; repeatable for probe; output path for gen-synthetic");
  app.add_option("--epochs", epochs, "pretraining (or probe) epochs");
  app.add_option("--batch", batch, "batch size of the command");
  app.add_option("--patch", patch, "patch size in pixels");
  app.add_option("--pos-table", pos_table, "positional table size")->check(CLI::IsMember({"grid", "785"}));
  app.add_option("--cov-coef", cov_coef, "covariance coefficient");
  app.add_option("--temp-coef", temp_coef, "temporal coefficient");
  app.add_option("--sparsity-tol", sparsity_tol, "|v| at or below this counts as zero");
  app.add_option("--f1", f1, "F1 averaging")->check(CLI::IsMember({"macro", "weighted"}));
  app.add_option("--checkpoint", checkpoints, "model checkpoint (.tovp with .json sidecar); repeatable");
  app.add_option("--scores", scores, "CSV of external scores, one per checkpoint, last column");
  app.add_option("--depth", depth, "encoder blocks");
  app.add_option("--dim", dim, "embedding width");
  app.add_option("--heads", heads, "attention heads");
  app.add_option("--image-size", image_size, "encoder input size in pixels");
  app.add_option("--kind", kind, "synthetic store kind: moving_dot | noise");
  app.add_option("--episodes", episodes, "synthetic episodes");
  app.add_option("--frames", frames, "synthetic frames per episode");
  app.add_option("--set", sets, "any config key, as key=value; repeatable");

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    Assignments file;
    if (const char* env = std::getenv("TOV_OUT"); env && *env) file.emplace_back("out", env);
    if (!config_path.empty()) {
      const auto from_file = read_config_file(config_path);
      file.insert(file.end(), from_file.begin(), from_file.end());
    }
    Assignments flags;
    auto flag = [&](const std::string& key, const std::string& value, const char* name) {
      if (app.count(name)) flags.emplace_back(key, value);
    };
    auto join = [](const std::vector<std::string>& v) {
      std::string s;
      for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
      return s;
    };
    const std::string batch_key = command == "probe"       ? "probe.batch_size"
                                  : command == "diagnose"  ? "diagnose.batch_size"
                                  : command == "gradcheck" ? "gradcheck.batch"
                                                           : "ssl.batch_size";
    flag("out", out_dir, "--out");
    flag("seed", seed, "--seed");
    flag("threads", threads, "--threads");
    flag("data", join(data), "--data");
    flag("checkpoints", join(checkpoints), "--checkpoint");
    flag("scores", scores, "--scores");
    flag(command == "probe" ? "probe.epochs" : "ssl.epochs", epochs, "--epochs");
    flag(batch_key, batch, "--batch");
    flag("vit.patch_size", patch, "--patch");
    flag("vit.pos_table", pos_table, "--pos-table");
    flag("ssl.cov_coef", cov_coef, "--cov-coef");
    flag("ssl.temp_coef", temp_coef, "--temp-coef");
    flag("diagnose.sparsity_tol", sparsity_tol, "--sparsity-tol");
    flag("probe.f1", f1, "--f1");
    flag("vit.depth", depth, "--depth");
    flag("vit.embed_dim", dim, "--dim");
    flag("vit.heads", heads, "--heads");
    flag(command == "gen-synthetic" ? "synthetic.image_size" : "vit.image_size", image_size, "--image-size");
    flag("synthetic.kind", kind, "--kind");
    flag("synthetic.episodes", episodes, "--episodes");
    flag("synthetic.frames", frames, "--frames");
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError(s, "--set expects key=value");
      flags.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }

    const RunConfig config = resolve_config(command, file, flags);
    const Outcome outcome = execute(config);
    out << outcome.summary << '\n';
    return outcome.code;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << '\n';
    return kFormatError;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kNumericalError;
  } catch (const DomainError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kNumericalError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace tovreg::cli
