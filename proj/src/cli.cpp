/*
 * Copyright 2026 The TAML Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "taml/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <sstream>

#include "taml/checkpoint.hpp"
#include "taml/error.hpp"
#include "taml/metrics.hpp"
#include "taml/trainer.hpp"

namespace taml {
namespace {

namespace fs = std::filesystem;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

std::string fixed(double v, int digits = 6) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

std::string status_line(const TrialStatus& status,
                        const std::vector<std::string>& names) {
  const auto& r = status.record;
  std::string line = "trial=" + std::to_string(r.trial) + "\ttask=" + names.at(r.task);
  if (r.failed) return line + "\tfailed";
  line += "\tval=" + fixed(r.validation_reward) + "\ttest=" + fixed(r.test_reward);
  if (status.stats) {
    line += "\tb=" + fixed(status.stats->baseline) +
            "\tsigma=" + fixed(std::sqrt(status.stats->variance));
  }
  if (status.advantage) line += "\tadv=" + fixed(*status.advantage);
  return line;
}

int cmd_validate(const CliInvocation& inv, std::ostream& out) {
  const auto config = load_config(inv.config_path, inv.overrides);
  out << "config ok: mode=" << to_string(config.run.mode)
      << " dimensions=" << config.space.num_dimensions()
      << " cardinality=" << to_string(cardinality(config.space))
      << " tasks=" << config.run_tasks.size() << " budget=" << config.run.budget
      << " digest=" << config.run.config_digest << "\n";
  return 0;
}

int cmd_inspect(const CliInvocation& inv, std::ostream& out) {
  const CheckpointInfo info = read_checkpoint_info(inv.input_path);
  out << "format_version: " << info.format_version << "\n";
  out << "space_hash: " << to_hex(info.space_hash) << "\n";
  out << "n_tasks: " << info.num_tasks << "\n";
  out << "dimensions: " << info.option_counts.size() << "\n";
  out << "option_counts:";
  for (int c : info.option_counts) out << " " << c;
  out << "\n";
  out << "embedding_size: " << info.config.embedding_size << "\n";
  out << "hidden_size: " << info.config.hidden_size << "\n";
  out << "num_layers: " << info.config.num_layers << "\n";
  out << "task_conditioning: " << (info.config.task_conditioning ? "true" : "false") << "\n";
  out << "parameter_version: " << info.parameter_version << "\n";
  out << "optimizer: " << to_string(info.optimizer) << " (step " << info.optimizer_step
      << ")\n";
  if (!inv.config_path.empty()) {
    const auto config = load_config(inv.config_path, inv.overrides);
    load_checkpoint(inv.input_path, config.space);
    out << "space: matches " << inv.config_path << "\n";
  }
  return 0;
}

int cmd_metrics(const CliInvocation& inv, std::ostream& out) {
  const TrialLog log = read_trial_log(inv.input_path);
  const int n = inv.top_n.value_or(kDefaultTopN);
  const std::size_t stride = inv.stride.value_or(kDefaultStride);
  const std::string csv = learning_curve_csv(learning_curve(log, n, stride));
  if (inv.out_dir) {
    fs::create_directories(*inv.out_dir);
    write_text(fs::path(*inv.out_dir) / "learning_curve.csv", csv);
  } else {
    out << csv;
  }
  const TopN top = accuracy_top_n(log, n);
  out << "trials: " << log.size() << "\n";
  out << "val_top" << n << ": " << fixed(top.validation, 9) << "\n";
  out << "test_top" << n << ": " << fixed(top.test, 9) << "\n";
  return 0;
}

int cmd_run(const CliInvocation& inv, std::ostream& out) {
  const auto config = load_config(inv.config_path, inv.overrides);
  // Load and check any source checkpoint before touching the output directory.
  std::optional<Checkpoint> source;
  if (!config.run.source_checkpoint.empty() &&
      (config.run.mode == RunMode::kTransfer ||
       config.run.mode == RunMode::kAblateNoTaskEmbedding ||
       config.run.mode == RunMode::kAblateFixedArchitecture)) {
    source = load_checkpoint(config.run.source_checkpoint, config.space);
  }
  const fs::path dir = resolve_out_dir(inv, config);
  fs::create_directories(dir);
  std::vector<std::string> written;
  auto record_file = [&](const std::string& name) { written.push_back(name); };

  write_text(dir / "resolved_config.yaml", render_config(config));
  record_file("resolved_config.yaml");

  std::vector<std::unique_ptr<SurrogateEvaluator>> owned;
  std::vector<const Evaluator*> evaluators;
  std::vector<std::string> names;
  for (int i : config.run_tasks) {
    owned.push_back(std::make_unique<SurrogateEvaluator>(config.space, config.tasks[i]));
    evaluators.push_back(owned.back().get());
    names.push_back(config.tasks[i].name);
  }

  RunMetadata metadata;
  metadata.mode = to_string(config.run.mode);
  metadata.seed = config.run.seed;
  metadata.space_hash = to_hex(config.space.content_hash());
  metadata.config_digest = config.run.config_digest;
  metadata.task_names = names;
  TrialLogWriter log_writer((dir / "trials.jsonl").string(), metadata);
  record_file("trials.jsonl");
  std::ofstream status_file(dir / "status.tsv", std::ios::trunc);
  if (!status_file) throw IoError("cannot write status sidecar in '" + dir.string() + "'");
  record_file("status.tsv");

  RunHooks hooks;
  hooks.on_trial = [&](const TrialStatus& status) {
    log_writer.append(status.record);
    const std::string line = status_line(status, names);
    status_file << line << "\n";
    if (!inv.quiet) out << line << "\n";
  };
  const Digest space_hash = config.space.content_hash();
  hooks.on_checkpoint = [&](std::uint64_t completed, const ControllerParams& params,
                            const OptimizerState& opt) {
    const std::string name = "checkpoint_" + std::to_string(completed) + ".ckpt";
    save_checkpoint((dir / name).string(), params, opt, space_hash);
    record_file(name);
  };

  auto load_source = [&]() -> const Checkpoint& {
    if (!source) throw ConfigError("mode " + to_string(config.run.mode) + " needs a source checkpoint");
    return *source;
  };
  RunResult result;
  switch (config.run.mode) {
    case RunMode::kRandom:
      result = run_random_search(config.space, *evaluators[0], config.run, hooks);
      break;
    case RunMode::kSingleTask:
      result = run_single_task(config.space, *evaluators[0], config.run, hooks);
      break;
    case RunMode::kMultitask:
      result = run_multitask(config.space, evaluators, config.run, hooks);
      break;
    case RunMode::kTransfer:
      result = run_transfer(config.space, load_source(), *evaluators[0], config.run, hooks);
      break;
    case RunMode::kAblateNoTaskEmbedding:
      if (config.run.source_checkpoint.empty()) {
        result = run_multitask(config.space, evaluators, config.run, hooks);
      } else {
        result = run_ablation_no_task_embedding(config.space, load_source(),
                                                *evaluators[0], config.run, hooks);
      }
      break;
    case RunMode::kAblateFixedArchitecture:
      result = run_fixed_architecture_transfer(config.space, load_source(),
                                               *evaluators[0], config.run, hooks);
      break;
  }
  status_file.close();

  if (result.params) {
    save_checkpoint((dir / "checkpoint_final.ckpt").string(), *result.params,
                    *result.optimizer, space_hash);
    record_file("checkpoint_final.ckpt");

    std::vector<std::string> row_names(result.params->num_tasks());
    for (std::size_t i = 0; i < row_names.size(); ++i) {
      row_names[i] = "pretrained_" + std::to_string(i);
    }
    for (std::size_t j = 0; j < names.size(); ++j) {
      row_names[result.controller_task_ids[j]] = names[j];
    }
    write_text(dir / "embedding_similarity.csv",
               similarity_csv(embedding_similarity(*result.params), row_names));
    record_file("embedding_similarity.csv");
  }
  if (result.reward_stats) {
    std::string csv = "task,baseline,sigma,count\n";
    for (std::size_t j = 0; j < names.size(); ++j) {
      const auto& s = result.reward_stats->task(static_cast<int>(j));
      std::ostringstream row;
      row.precision(17);
      row << names[j] << "," << s.baseline << "," << std::sqrt(s.variance) << ","
          << s.count << "\n";
      csv += row.str();
    }
    write_text(dir / "reward_stats.csv", csv);
    record_file("reward_stats.csv");
  }
  write_text(dir / "learning_curve.csv",
             learning_curve_csv(learning_curve(result.log, config.top_n, config.stride)));
  record_file("learning_curve.csv");

  nlohmann::json manifest;
  manifest["mode"] = to_string(config.run.mode);
  manifest["seed"] = config.run.seed;
  manifest["config_digest"] = config.run.config_digest;
  for (const auto& name : written) {
    manifest["files"][name] = to_hex(sha256(read_text(dir / name)));
  }
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");

  const TopN top = accuracy_top_n(result.log, config.top_n);
  out << "done: " << result.log.size() << " trials, val_top" << config.top_n << "="
      << fixed(top.validation) << " test_top" << config.top_n << "=" << fixed(top.test)
      << ", output in " << dir.string() << "\n";
  return 0;
}

}  // namespace

std::string resolve_out_dir(const CliInvocation& inv, const ExperimentConfig& config) {
  if (inv.out_dir) return *inv.out_dir;
  const std::string leaf = to_string(config.run.mode) + "-seed" + std::to_string(config.run.seed);
  if (const char* root = std::getenv("TAML_OUT"); root && *root) {
    return (fs::path(root) / leaf).string();
  }
  return (fs::path("taml_runs") / leaf).string();
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Transfer neural AutoML: controller search, multitask pretraining and transfer"};
  app.require_subcommand(1);
  CliInvocation inv;

  auto add_overrides = [&](CLI::App* cmd) {
    cmd->add_option("--seed", inv.overrides.seed, "Root seed (overrides run.seed)");
    cmd->add_option("--budget", inv.overrides.budget, "Trial budget B")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--parallelism", inv.overrides.parallelism, "Concurrent evaluators W")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--mode", inv.overrides.mode, "Run mode (overrides run.mode)");
    cmd->add_option("--from-checkpoint", inv.overrides.source_checkpoint,
                    "Source checkpoint for transfer and ablation modes");
  };

  auto* run = app.add_subcommand("run", "Run a search and write its artifacts");
  run->add_option("--config", inv.config_path, "Run config (YAML)")->required();
  run->add_option("--out", inv.out_dir, "Output directory");
  run->add_flag("--quiet", inv.quiet, "No per-trial status lines on stdout");
  add_overrides(run);

  auto* validate = app.add_subcommand("validate-config", "Check a config; writes nothing");
  validate->add_option("--config", inv.config_path, "Run config (YAML)")->required();
  add_overrides(validate);

  auto* inspect = app.add_subcommand("inspect-checkpoint", "Print a checkpoint header");
  inspect->add_option("checkpoint", inv.input_path, "Checkpoint file")->required();
  inspect->add_option("--config", inv.config_path, "Also verify against this config's space");

  auto* metrics = app.add_subcommand("metrics", "Learning curve and accuracy-topN of a trial log");
  metrics->add_option("log", inv.input_path, "Trial log (trials.jsonl)")->required();
  metrics->add_option("--out", inv.out_dir, "Write learning_curve.csv here instead of stdout");
  metrics->add_option("--top-n", inv.top_n, "N for accuracy-topN")->check(CLI::PositiveNumber);
  metrics->add_option("--stride", inv.stride, "Learning-curve stride")->check(CLI::PositiveNumber);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(ErrorKind::kConfig);
  }

  try {
    if (run->parsed()) return cmd_run(inv, out);
    if (validate->parsed()) return cmd_validate(inv, out);
    if (inspect->parsed()) return cmd_inspect(inv, out);
    if (metrics->parsed()) return cmd_metrics(inv, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(ErrorKind::kIo);
  }
  return exit_code(ErrorKind::kConfig);
}

}  // namespace taml
