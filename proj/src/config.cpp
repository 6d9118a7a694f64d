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

#include "taml/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "taml/error.hpp"
#include "taml/seeding.hpp"

namespace taml {
namespace {

// A YAML mapping with a known key set and source-located diagnostics.
class Section {
 public:
  Section(YAML::Node node, std::string name, std::string source)
      : node_(std::move(node)), name_(std::move(name)), source_(std::move(source)) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) {
      fail(node_, "section '" + name_ + "' must be a mapping");
    }
  }

  bool present() const { return node_ && node_.IsMap(); }

  void allow(std::initializer_list<const char*> keys) const {
    if (!present()) return;
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.count(key)) {
        fail(kv.first, "unknown key '" + key + "' in section '" + name_ + "'");
      }
    }
  }

  YAML::Node child(const std::string& key) const {
    return present() ? node_[key] : YAML::Node();
  }
  bool has(const std::string& key) const {
    return present() && node_[key] && !node_[key].IsNull();
  }

  template <typename T>
  std::optional<T> get(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return convert<T>(node_[key], key);
  }

  template <typename T>
  T convert(const YAML::Node& node, const std::string& key) const {
    try {
      return node.as<T>();
    } catch (const YAML::Exception&) {
      fail(node, "'" + name_ + "." + key + "' has the wrong type");
    }
  }

  Section sub(const std::string& key) const {
    return Section(child(key), name_ + "." + key, source_);
  }

  [[noreturn]] void fail(const YAML::Node& node, const std::string& what) const {
    const int line = node.Mark().line >= 0 ? node.Mark().line + 1 : 0;
    throw ConfigError(source_ + ":" + std::to_string(line) + ": " + what);
  }
  [[noreturn]] void fail(const std::string& what) const { fail(node_, what); }

  const YAML::Node& node() const { return node_; }
  const std::string& source() const { return source_; }

 private:
  YAML::Node node_;
  std::string name_;
  std::string source_;
};

template <typename T>
void assign(const Section& s, const std::string& key, T& out) {
  if (auto v = s.get<T>(key)) out = *v;
}

SearchSpace space_from_node(const Section& section) {
  section.allow({"preset", "dimensions"});
  if (section.has("preset") && section.has("dimensions")) {
    section.fail("space: give either 'preset' or 'dimensions', not both");
  }
  if (section.has("preset")) {
    try {
      return space_preset(*section.get<std::string>("preset"));
    } catch (const Error& e) {
      section.fail(section.child("preset"), e.what());
    }
  }
  const YAML::Node dims = section.child("dimensions");
  if (!dims || !dims.IsSequence()) {
    section.fail("space: 'dimensions' must be a list");
  }
  std::vector<Dimension> out;
  for (std::size_t d = 0; d < dims.size(); ++d) {
    Section dim(dims[d], "space.dimensions[" + std::to_string(d) + "]", section.source());
    dim.allow({"name", "options"});
    Dimension parsed;
    parsed.name = dim.get<std::string>("name").value_or("dim" + std::to_string(d));
    if (!dim.has("options")) dim.fail("dimension '" + parsed.name + "' has no options");
    parsed.options = dim.convert<std::vector<std::string>>(dim.child("options"), "options");
    out.push_back(std::move(parsed));
  }
  try {
    return SearchSpace(std::move(out));
  } catch (const Error& e) {
    section.fail(dims, e.what());
  }
}

TaskDefinition task_from_node(const Section& s, int index) {
  s.allow({"name", "cluster", "preferred", "weights", "interactions", "base",
           "val_noise_std", "test_noise_std", "val_size", "cost"});
  TaskDefinition task;
  task.name = s.get<std::string>("name").value_or("task" + std::to_string(index));
  assign(s, "cluster", task.cluster);
  assign(s, "preferred", task.preferred);
  assign(s, "weights", task.weights);
  assign(s, "base", task.base);
  assign(s, "val_noise_std", task.val_noise_std);
  assign(s, "test_noise_std", task.test_noise_std);
  assign(s, "val_size", task.val_size);
  assign(s, "cost", task.cost);
  if (s.has("interactions")) {
    const YAML::Node list = s.child("interactions");
    for (std::size_t i = 0; i < list.size(); ++i) {
      Section inter(list[i], "interactions[" + std::to_string(i) + "]", s.source());
      inter.allow({"first", "second", "weight"});
      Interaction parsed;
      assign(inter, "first", parsed.first);
      assign(inter, "second", parsed.second);
      assign(inter, "weight", parsed.weight);
      task.interactions.push_back(parsed);
    }
  }
  return task;
}

FamilyConfig family_from_node(const Section& s) {
  s.allow({"clusters", "tasks_per_cluster", "shared_dims", "cluster_preferences",
           "weights", "base", "val_noise_std", "test_noise_std", "val_size",
           "outlier_dimension", "name_prefix", "seed"});
  FamilyConfig f;
  assign(s, "clusters", f.clusters);
  assign(s, "tasks_per_cluster", f.tasks_per_cluster);
  assign(s, "shared_dims", f.shared_dims);
  assign(s, "cluster_preferences", f.cluster_preferences);
  assign(s, "weights", f.weights);
  assign(s, "base", f.base);
  assign(s, "val_noise_std", f.val_noise_std);
  assign(s, "test_noise_std", f.test_noise_std);
  assign(s, "val_size", f.val_size);
  assign(s, "name_prefix", f.name_prefix);
  if (auto d = s.get<int>("outlier_dimension")) f.outlier_dimension = *d;
  return f;
}

void emit_task(YAML::Emitter& out, const TaskDefinition& t) {
  out << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << t.name;
  out << YAML::Key << "cluster" << YAML::Value << t.cluster;
  out << YAML::Key << "preferred" << YAML::Value << YAML::Flow << t.preferred;
  out << YAML::Key << "weights" << YAML::Value << YAML::Flow << t.weights;
  if (!t.interactions.empty()) {
    out << YAML::Key << "interactions" << YAML::Value << YAML::BeginSeq;
    for (const auto& i : t.interactions) {
      out << YAML::Flow << YAML::BeginMap << YAML::Key << "first" << YAML::Value
          << i.first << YAML::Key << "second" << YAML::Value << i.second
          << YAML::Key << "weight" << YAML::Value << i.weight << YAML::EndMap;
    }
    out << YAML::EndSeq;
  }
  out << YAML::Key << "base" << YAML::Value << t.base;
  out << YAML::Key << "val_noise_std" << YAML::Value << t.val_noise_std;
  out << YAML::Key << "test_noise_std" << YAML::Value << t.test_noise_std;
  out << YAML::Key << "val_size" << YAML::Value << t.val_size;
  out << YAML::Key << "cost" << YAML::Value << t.cost;
  out << YAML::EndMap;
}

void emit_dimensions(YAML::Emitter& out, const SearchSpace& space) {
  out << YAML::Key << "dimensions" << YAML::Value << YAML::BeginSeq;
  for (const auto& dim : space.dimensions()) {
    out << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << YAML::DoubleQuoted << dim.name;
    out << YAML::Key << "options" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (const auto& option : dim.options) out << YAML::DoubleQuoted << option;
    out << YAML::EndSeq;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
}

void check_run_tasks(const ExperimentConfig& c, const Section& run) {
  const auto n = c.run_tasks.size();
  const RunMode mode = c.run.mode;
  const bool has_source = !c.run.source_checkpoint.empty();
  auto need = [&](bool ok, const std::string& what) {
    if (!ok) run.fail("mode '" + to_string(mode) + "' " + what);
  };
  switch (mode) {
    case RunMode::kRandom:
    case RunMode::kSingleTask:
      need(n == 1, "needs exactly one task");
      break;
    case RunMode::kMultitask:
      need(n >= 2, "needs at least two tasks");
      break;
    case RunMode::kTransfer:
    case RunMode::kAblateFixedArchitecture:
      need(has_source, "needs run.source_checkpoint (or --from-checkpoint)");
      need(n == 1, "needs exactly one target task");
      break;
    case RunMode::kAblateNoTaskEmbedding:
      if (has_source) {
        need(n == 1, "with a source checkpoint needs exactly one target task");
      } else {
        need(n >= 2, "without a source checkpoint pretrains and needs at least two tasks");
      }
      break;
  }
}

}  // namespace

SearchSpace space_preset(const std::string& name) {
  if (name == "table1_text") return table1_text_preset();
  if (name == "table1_image") return table1_image_preset();
  throw ConfigError("unknown space preset '" + name +
                    "' (expected table1_text or table1_image)");
}

SearchSpace parse_space(const std::string& text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  Section top(root, "root", source);
  top.allow({"space"});
  if (!top.has("space")) top.fail("missing 'space' section");
  return space_from_node(top.sub("space"));
}

std::string render_space(const SearchSpace& space) {
  YAML::Emitter out;
  out << YAML::BeginMap << YAML::Key << "space" << YAML::Value << YAML::BeginMap;
  emit_dimensions(out, space);
  out << YAML::EndMap << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

ExperimentConfig parse_config(const std::string& text, const std::string& source,
                              const ConfigOverrides& overrides) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  Section top(root, "root", source);
  if (!top.present()) top.fail("config must be a mapping of sections");
  top.allow({"space", "tasks", "controller", "run", "metrics"});

  ExperimentConfig c;
  if (!top.has("space")) top.fail("missing 'space' section");
  c.space = space_from_node(top.sub("space"));

  // run
  const Section run = top.sub("run");
  run.allow({"mode", "budget", "parallelism", "seed", "checkpoint_every",
             "source_checkpoint", "tasks"});
  if (auto mode = overrides.mode ? overrides.mode : run.get<std::string>("mode")) {
    try {
      c.run.mode = mode_from_string(*mode);
    } catch (const Error& e) {
      run.fail(run.child("mode"), e.what());
    }
  } else {
    top.fail("run.mode is required");
  }
  if (auto v = run.get<long long>("budget")) {
    if (*v < 1) run.fail(run.child("budget"), "budget must be >= 1");
    c.run.budget = static_cast<std::uint64_t>(*v);
  }
  if (overrides.budget) c.run.budget = *overrides.budget;
  assign(run, "parallelism", c.run.parallelism);
  if (overrides.parallelism) c.run.parallelism = *overrides.parallelism;
  assign(run, "seed", c.run.seed);
  if (overrides.seed) c.run.seed = *overrides.seed;
  assign(run, "checkpoint_every", c.run.checkpoint_every);
  assign(run, "source_checkpoint", c.run.source_checkpoint);
  if (overrides.source_checkpoint) c.run.source_checkpoint = *overrides.source_checkpoint;

  // controller
  const Section ctl = top.sub("controller");
  ctl.allow({"learning_rate", "optimizer", "embedding_size", "hidden_size",
             "num_layers", "init_range", "entropy_weight", "reward_decay",
             "task_conditioning", "freeze_shared"});
  assign(ctl, "learning_rate", c.run.optimizer.learning_rate);
  if (auto name = ctl.get<std::string>("optimizer")) {
    try {
      c.run.optimizer.kind = optimizer_from_string(*name);
    } catch (const Error& e) {
      ctl.fail(ctl.child("optimizer"), e.what());
    }
  }
  assign(ctl, "embedding_size", c.run.controller.embedding_size);
  assign(ctl, "hidden_size", c.run.controller.hidden_size);
  assign(ctl, "num_layers", c.run.controller.num_layers);
  assign(ctl, "init_range", c.run.controller.init_range);
  assign(ctl, "entropy_weight", c.run.entropy_weight);
  assign(ctl, "reward_decay", c.run.reward_decay);
  assign(ctl, "task_conditioning", c.run.controller.task_conditioning);
  assign(ctl, "freeze_shared", c.run.freeze_shared);
  if (c.run.mode == RunMode::kAblateNoTaskEmbedding) {
    c.run.controller.task_conditioning = false;
  }
  if (c.run.controller.embedding_size < 1 || c.run.controller.hidden_size < 1 ||
      c.run.controller.num_layers < 1) {
    ctl.fail("controller sizes must be positive");
  }
  if (!(c.run.controller.init_range >= 0.0)) ctl.fail("init_range must be >= 0");

  // metrics
  const Section metrics = top.sub("metrics");
  metrics.allow({"top_n", "stride"});
  assign(metrics, "top_n", c.top_n);
  assign(metrics, "stride", c.stride);
  if (c.top_n < 1) metrics.fail("metrics.top_n must be >= 1");
  if (c.stride < 1) metrics.fail("metrics.stride must be >= 1");

  // tasks
  const Section tasks = top.sub("tasks");
  tasks.allow({"family", "list"});
  if (tasks.has("family")) {
    const Section fam = tasks.sub("family");
    FamilyConfig family = family_from_node(fam);
    const std::uint64_t family_seed = fam.get<std::uint64_t>("seed").value_or(
        derive_seed(c.run.seed, "task_family"));
    try {
      c.tasks = make_task_family(c.space, family, family_seed);
    } catch (const Error& e) {
      fam.fail(e.what());
    }
  }
  if (tasks.has("list")) {
    const YAML::Node list = tasks.child("list");
    if (!list.IsSequence()) tasks.fail(list, "tasks.list must be a list");
    for (std::size_t i = 0; i < list.size(); ++i) {
      Section t(list[i], "tasks.list[" + std::to_string(i) + "]", source);
      TaskDefinition task = task_from_node(t, static_cast<int>(c.tasks.size()));
      try {
        validate_task(c.space, task);
      } catch (const Error& e) {
        t.fail(e.what());
      }
      c.tasks.push_back(std::move(task));
    }
  }
  std::set<std::string> names;
  for (const auto& t : c.tasks) {
    if (!names.insert(t.name).second) tasks.fail("duplicate task name '" + t.name + "'");
  }
  if (c.tasks.empty()) top.fail("no tasks defined (tasks.family or tasks.list)");

  if (run.has("tasks")) {
    for (const auto& name :
         run.convert<std::vector<std::string>>(run.child("tasks"), "tasks")) {
      auto it = std::find_if(c.tasks.begin(), c.tasks.end(),
                             [&](const TaskDefinition& t) { return t.name == name; });
      if (it == c.tasks.end()) run.fail(run.child("tasks"), "unknown task '" + name + "'");
      c.run_tasks.push_back(static_cast<int>(it - c.tasks.begin()));
    }
  } else {
    for (std::size_t i = 0; i < c.tasks.size(); ++i) c.run_tasks.push_back(static_cast<int>(i));
  }

  try {
    validate_run_config(c.run);
  } catch (const Error& e) {
    run.fail(e.what());
  }
  check_run_tasks(c, run);
  c.run.config_digest = to_hex(sha256(render_config(c)));
  return c;
}

ExperimentConfig load_config(const std::string& path, const ConfigOverrides& overrides) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path, overrides);
}

std::string render_config(const ExperimentConfig& c) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;

  out << YAML::Key << "space" << YAML::Value << YAML::BeginMap;
  emit_dimensions(out, c.space);
  out << YAML::EndMap;

  out << YAML::Key << "tasks" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "list" << YAML::Value << YAML::BeginSeq;
  for (const auto& t : c.tasks) emit_task(out, t);
  out << YAML::EndSeq << YAML::EndMap;

  const auto& ctl = c.run.controller;
  out << YAML::Key << "controller" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "learning_rate" << YAML::Value << c.run.optimizer.learning_rate;
  out << YAML::Key << "optimizer" << YAML::Value << to_string(c.run.optimizer.kind);
  out << YAML::Key << "embedding_size" << YAML::Value << ctl.embedding_size;
  out << YAML::Key << "hidden_size" << YAML::Value << ctl.hidden_size;
  out << YAML::Key << "num_layers" << YAML::Value << ctl.num_layers;
  out << YAML::Key << "init_range" << YAML::Value << ctl.init_range;
  out << YAML::Key << "entropy_weight" << YAML::Value << c.run.entropy_weight;
  out << YAML::Key << "reward_decay" << YAML::Value << c.run.reward_decay;
  out << YAML::Key << "task_conditioning" << YAML::Value << ctl.task_conditioning;
  out << YAML::Key << "freeze_shared" << YAML::Value << c.run.freeze_shared;
  out << YAML::EndMap;

  out << YAML::Key << "run" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "mode" << YAML::Value << to_string(c.run.mode);
  out << YAML::Key << "budget" << YAML::Value << c.run.budget;
  out << YAML::Key << "parallelism" << YAML::Value << c.run.parallelism;
  out << YAML::Key << "seed" << YAML::Value << c.run.seed;
  out << YAML::Key << "checkpoint_every" << YAML::Value << c.run.checkpoint_every;
  if (!c.run.source_checkpoint.empty()) {
    out << YAML::Key << "source_checkpoint" << YAML::Value << c.run.source_checkpoint;
  }
  out << YAML::Key << "tasks" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (int i : c.run_tasks) out << c.tasks[i].name;
  out << YAML::EndSeq;
  out << YAML::EndMap;

  out << YAML::Key << "metrics" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "top_n" << YAML::Value << c.top_n;
  out << YAML::Key << "stride" << YAML::Value << c.stride;
  out << YAML::EndMap;

  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace taml
