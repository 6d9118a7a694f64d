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

#ifndef TAML_TRAINER_HPP_
#define TAML_TRAINER_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "taml/checkpoint.hpp"
#include "taml/controller.hpp"
#include "taml/optimizer.hpp"
#include "taml/reward_stats.hpp"
#include "taml/search_space.hpp"
#include "taml/task_env.hpp"
#include "taml/trial_log.hpp"

namespace taml {

enum class RunMode {
  kRandom,
  kSingleTask,
  kMultitask,
  kTransfer,
  kAblateNoTaskEmbedding,
  kAblateFixedArchitecture,
};

std::string to_string(RunMode mode);
RunMode mode_from_string(const std::string& name);
bool uses_controller(RunMode mode);

struct RunConfig {
  RunMode mode = RunMode::kSingleTask;
  std::uint64_t budget = 500;
  int parallelism = 1;
  std::uint64_t seed = 0;
  ControllerConfig controller;
  OptimizerConfig optimizer;
  double entropy_weight = 1e-2;
  double reward_decay = RewardStats::kDefaultDecay;
  // Transfer only: train the new task embedding and keep shared weights fixed.
  bool freeze_shared = false;
  // Emit a checkpoint every K completed trials (0 = final only).
  std::uint64_t checkpoint_every = 0;
  std::string source_checkpoint;
  // Recorded in the trial log header.
  std::string config_digest;
};

// Throws ConfigError for B < 1, W < 1 and other out-of-range fields.
void validate_run_config(const RunConfig& config);

struct TrialStatus {
  const TrialRecord& record;
  // Absent for failed trials and modes without a controller update.
  std::optional<TaskRewardStats> stats;
  std::optional<double> advantage;
};

struct RunHooks {
  std::function<void(const TrialStatus&)> on_trial;
  std::function<void(std::uint64_t completed, const ControllerParams&,
                     const OptimizerState&)>
      on_checkpoint;
};

struct RunResult {
  // Record task ids index the evaluator list passed to the run.
  TrialLog log;
  std::optional<ControllerParams> params;
  std::optional<OptimizerState> optimizer;
  std::optional<RewardStats> reward_stats;
  // Controller task id for each evaluator.
  std::vector<int> controller_task_ids;
  std::uint64_t initial_version = 0;
};

// Uniform sampling, one task, no controller.
RunResult run_random_search(const SearchSpace& space, const Evaluator& task,
                            const RunConfig& config, const RunHooks& hooks = {});

// A fresh one-task controller updated after every completed trial.
RunResult run_single_task(const SearchSpace& space, const Evaluator& task,
                          const RunConfig& config, const RunHooks& hooks = {});

// Uniformly sampled task per trial; each update touches the shared weights
// and the sampled task's embedding row. With
// config.controller.task_conditioning = false this is the task-agnostic
// pretraining used by the no-task-embedding ablation.
RunResult run_multitask(const SearchSpace& space,
                        const std::vector<const Evaluator*>& tasks,
                        const RunConfig& config, const RunHooks& hooks = {});

// Reloads a pretrained controller, appends a random embedding for the new
// task and resumes per-completion updates on it with fresh reward stats.
RunResult run_transfer(const SearchSpace& space, const Checkpoint& source,
                       const Evaluator& task, const RunConfig& config,
                       const RunHooks& hooks = {});

// Transfer of a task-agnostic controller (zero task input everywhere).
RunResult run_ablation_no_task_embedding(const SearchSpace& space,
                                         const Checkpoint& source,
                                         const Evaluator& task,
                                         const RunConfig& config,
                                         const RunHooks& hooks = {});

// Evaluates the greedy spec of a task-agnostic controller B times.
RunResult run_fixed_architecture_transfer(const SearchSpace& space,
                                          const Checkpoint& source,
                                          const Evaluator& task,
                                          const RunConfig& config,
                                          const RunHooks& hooks = {});

}  // namespace taml

#endif  // TAML_TRAINER_HPP_
