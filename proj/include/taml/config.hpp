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

#ifndef TAML_CONFIG_HPP_
#define TAML_CONFIG_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "taml/search_space.hpp"
#include "taml/task_env.hpp"
#include "taml/trainer.hpp"

namespace taml {

// Values given on the command line; applied after the file.
struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> budget;
  std::optional<int> parallelism;
  std::optional<std::string> mode;
  std::optional<std::string> source_checkpoint;
};

// A fully resolved run: task families expanded, defaults and overrides
// applied.
struct ExperimentConfig {
  SearchSpace space = SearchSpace::from_counts({1});
  std::vector<TaskDefinition> tasks;
  // Indices into `tasks` the run uses, in order.
  std::vector<int> run_tasks;
  RunConfig run;
  int top_n = 10;
  std::size_t stride = 5;
};

// YAML with top-level sections space, tasks, controller, run, metrics.
// Unknown keys are rejected. Errors carry "<source>:<line>:" prefixes.
ExperimentConfig parse_config(const std::string& text, const std::string& source,
                              const ConfigOverrides& overrides = {});
ExperimentConfig load_config(const std::string& path,
                             const ConfigOverrides& overrides = {});

// Re-parsable YAML of the resolved config (family tasks written out
// explicitly). Its SHA-256 is the run's config digest.
std::string render_config(const ExperimentConfig& config);

// Space section alone: a list of {name, options} maps or {preset: name}.
SearchSpace parse_space(const std::string& text, const std::string& source);
std::string render_space(const SearchSpace& space);

SearchSpace space_preset(const std::string& name);

}  // namespace taml

#endif  // TAML_CONFIG_HPP_
