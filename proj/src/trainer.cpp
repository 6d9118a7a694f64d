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

#include "taml/trainer.hpp"

#include <cmath>
#include <condition_variable>
#include <deque>
#include <exception>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <stop_token>
#include <thread>

#include "taml/error.hpp"
#include "taml/seeding.hpp"

namespace taml {
namespace {

struct Proposal {
  ModelSpec spec;
  std::uint64_t version = 0;
};

using Job = std::function<Proposal()>;

struct Completion {
  std::uint64_t dispatch = 0;
  std::size_t task = 0;
  Proposal proposal;
  std::optional<Evaluation> evaluation;
  std::exception_ptr fatal;
};

// Runs trial jobs on W threads; completions come back in completion order.
class WorkerPool {
 public:
  explicit WorkerPool(int workers) {
    for (int i = 0; i < workers; ++i) {
      threads_.emplace_back([this](std::stop_token stop) { work(stop); });
    }
  }

  void submit(std::function<Completion()> job) {
    {
      std::lock_guard lock(mu_);
      jobs_.push_back(std::move(job));
    }
    job_cv_.notify_one();
  }

  Completion next() {
    std::unique_lock lock(mu_);
    done_cv_.wait(lock, [&] { return !done_.empty(); });
    Completion c = std::move(done_.front());
    done_.pop_front();
    return c;
  }

 private:
  void work(std::stop_token stop) {
    while (true) {
      std::function<Completion()> job;
      {
        std::unique_lock lock(mu_);
        if (!job_cv_.wait(lock, stop, [&] { return !jobs_.empty(); })) return;
        job = std::move(jobs_.front());
        jobs_.pop_front();
      }
      Completion c = job();
      {
        std::lock_guard lock(mu_);
        done_.push_back(std::move(c));
      }
      done_cv_.notify_one();
    }
  }

  std::mutex mu_;
  std::condition_variable_any job_cv_;
  std::condition_variable done_cv_;
  std::deque<std::function<Completion()>> jobs_;
  std::deque<Completion> done_;
  std::vector<std::jthread> threads_;
};

Completion execute(std::uint64_t dispatch, std::size_t task, const Job& job,
                   const Evaluator& evaluator, std::uint64_t seed) {
  Completion c;
  c.dispatch = dispatch;
  c.task = task;
  try {
    c.proposal = job();
  } catch (...) {
    c.fatal = std::current_exception();
    return c;
  }
  try {
    c.evaluation = evaluator.evaluate(c.proposal.spec,
                                      derive_seed(seed, evaluator.name(), dispatch));
  } catch (const std::exception&) {
    c.evaluation.reset();
  }
  return c;
}

struct UpdateOutcome {
  std::optional<TaskRewardStats> stats;
  std::optional<double> advantage;
};

// Dispatch/complete loop shared by every mode. make_job(k, task) runs on the
// coordinator and returns work for a worker; on_success(record) runs on the
// coordinator for each non-failed completion, in completion order.
template <typename MakeJob, typename OnSuccess, typename AfterTrial>
TrialLog run_trials(const RunConfig& config,
                    const std::vector<const Evaluator*>& tasks, RunMetadata metadata,
                    MakeJob&& make_job, OnSuccess&& on_success,
                    AfterTrial&& after_trial, const RunHooks& hooks) {
  TrialLog log(std::move(metadata));
  double clock = 0.0;
  std::uint64_t completed = 0;

  auto choose_task = [&](std::uint64_t k) -> std::size_t {
    if (tasks.size() == 1) return 0;
    Rng rng = make_rng(config.seed, "task_choice", k);
    return std::uniform_int_distribution<std::size_t>(0, tasks.size() - 1)(rng);
  };

  auto complete = [&](Completion c) {
    if (c.fatal) std::rethrow_exception(c.fatal);
    TrialRecord record;
    record.trial = completed;
    record.task = static_cast<int>(c.task);
    record.spec = std::move(c.proposal.spec);
    record.version = c.proposal.version;
    UpdateOutcome outcome;
    if (c.evaluation) {
      record.validation_reward = c.evaluation->validation_reward;
      record.test_reward = c.evaluation->test_reward;
      record.wall_cost = c.evaluation->cost;
      clock += c.evaluation->cost;
      record.timestamp = clock;
      outcome = on_success(static_cast<const TrialRecord&>(record));
    } else {
      record.failed = true;
      record.timestamp = clock;
    }
    log.append(record);
    ++completed;
    if (hooks.on_trial) {
      hooks.on_trial(TrialStatus{log.records().back(), outcome.stats, outcome.advantage});
    }
    after_trial(completed);
  };

  if (config.parallelism == 1) {
    for (std::uint64_t k = 0; k < config.budget; ++k) {
      const std::size_t j = choose_task(k);
      Completion c;
      {
        // The job (and any params snapshot it holds) dies before the update.
        const Job job = make_job(k, j);
        c = execute(k, j, job, *tasks[j], config.seed);
      }
      complete(std::move(c));
    }
    return log;
  }

  // Staleness gate: a trial may see at most W completions between its
  // dispatch and its own completion. In the worst case every other in-flight
  // trial finishes first, so a new dispatch is held back while the oldest
  // in-flight trial could be pushed past that bound.
  const auto limit = static_cast<std::uint64_t>(config.parallelism);
  WorkerPool pool(config.parallelism);
  std::uint64_t dispatched = 0;
  std::map<std::uint64_t, std::uint64_t> in_flight;  // dispatch index -> completed at dispatch
  std::multiset<std::uint64_t> dispatch_marks;
  while (completed < config.budget) {
    while (in_flight.size() < limit && dispatched < config.budget) {
      if (!dispatch_marks.empty() &&
          completed + in_flight.size() - *dispatch_marks.begin() > limit) {
        break;
      }
      const std::uint64_t k = dispatched++;
      const std::size_t j = choose_task(k);
      pool.submit([k, j, job = make_job(k, j), evaluator = tasks[j],
                   seed = config.seed] { return execute(k, j, job, *evaluator, seed); });
      in_flight.emplace(k, completed);
      dispatch_marks.insert(completed);
    }
    Completion c = pool.next();
    const auto it = in_flight.find(c.dispatch);
    dispatch_marks.erase(dispatch_marks.find(it->second));
    in_flight.erase(it);
    complete(std::move(c));
  }
  return log;
}

RunMetadata make_metadata(const SearchSpace& space, const RunConfig& config,
                          const std::vector<const Evaluator*>& tasks) {
  RunMetadata m;
  m.mode = to_string(config.mode);
  m.seed = config.seed;
  m.space_hash = to_hex(space.content_hash());
  m.config_digest = config.config_digest;
  for (const auto* t : tasks) m.task_names.push_back(t->name());
  return m;
}

struct ControllerState {
  // Shared with in-flight jobs; copied before an update when still shared.
  std::shared_ptr<ControllerParams> params;
  OptimizerState optimizer;
  RewardStats stats{1};
  std::vector<int> task_ids;
  // When set, only this task-embedding row is trained.
  std::optional<int> trainable_row;
  std::uint64_t initial_version = 0;
};

void keep_only_task_row(GradientSet& grads, int row) {
  const Eigen::RowVectorXd kept = grads.task_embeddings.row(row);
  visit_tensors([](const std::string&, auto& t) { t.setZero(); }, grads);
  grads.task_embeddings.row(row) = kept;
}

RunResult controller_loop(const SearchSpace& space,
                          const std::vector<const Evaluator*>& tasks,
                          const RunConfig& config, const RunHooks& hooks,
                          ControllerState state) {
  auto make_job = [&](std::uint64_t k, std::size_t j) -> Job {
    std::shared_ptr<const ControllerParams> snapshot = state.params;
    const int task_id = state.task_ids[j];
    const std::uint64_t seed = config.seed;
    return [snapshot, task_id, seed, k] {
      Rng rng = make_rng(seed, "rollout", k);
      auto rollout = sample_rollout(*snapshot, task_id, rng);
      return Proposal{std::move(rollout.spec), rollout.parameter_version};
    };
  };

  auto on_success = [&](const TrialRecord& record) {
    const int j = record.task;
    state.stats.update(j, record.validation_reward);
    const double advantage =
        state.stats.normalized_advantage(j, record.validation_reward);
    GradientSet grads = policy_gradient(*state.params, state.task_ids[j], record.spec,
                                        advantage, config.entropy_weight);
    if (state.trainable_row) keep_only_task_row(grads, *state.trainable_row);
    if (state.params.use_count() > 1) {
      state.params = std::make_shared<ControllerParams>(*state.params);
    }
    apply_update(*state.params, grads, state.optimizer, config.optimizer);
    return UpdateOutcome{state.stats.task(j), advantage};
  };

  auto after_trial = [&](std::uint64_t completed) {
    if (hooks.on_checkpoint && config.checkpoint_every > 0 &&
        completed % config.checkpoint_every == 0) {
      hooks.on_checkpoint(completed, *state.params, state.optimizer);
    }
  };

  RunResult result;
  result.log = run_trials(config, tasks, make_metadata(space, config, tasks), make_job,
                          on_success, after_trial, hooks);
  result.params = *state.params;
  result.optimizer = std::move(state.optimizer);
  result.reward_stats = std::move(state.stats);
  result.controller_task_ids = std::move(state.task_ids);
  result.initial_version = state.initial_version;
  return result;
}

void check_space(const SearchSpace& space, const Checkpoint& source) {
  if (source.space_hash != space.content_hash()) {
    throw MismatchError("source checkpoint was trained on a different search space");
  }
  if (source.params.option_counts() != space.option_counts()) {
    throw MismatchError("source checkpoint does not match the search space shape");
  }
}

RunResult transfer_from(const SearchSpace& space, const Checkpoint& source,
                        const Evaluator& task, const RunConfig& config,
                        const RunHooks& hooks) {
  validate_run_config(config);
  check_space(space, source);
  ControllerState state;
  ControllerParams params = source.params;
  Rng rng = make_rng(config.seed, "transfer_embedding");
  const int new_id = add_task_embedding(params, rng);
  state.initial_version = params.version;
  state.optimizer = init_optimizer_state(params, config.optimizer.kind);
  state.params = std::make_shared<ControllerParams>(std::move(params));
  state.stats = RewardStats(1, config.reward_decay);
  state.task_ids = {new_id};
  if (config.freeze_shared) state.trainable_row = new_id;
  return controller_loop(space, {&task}, config, hooks, std::move(state));
}

}  // namespace

std::string to_string(RunMode mode) {
  switch (mode) {
    case RunMode::kRandom: return "random";
    case RunMode::kSingleTask: return "single_task";
    case RunMode::kMultitask: return "multitask";
    case RunMode::kTransfer: return "transfer";
    case RunMode::kAblateNoTaskEmbedding: return "ablate_no_task_embedding";
    case RunMode::kAblateFixedArchitecture: return "ablate_fixed_architecture";
  }
  return "unknown";
}

RunMode mode_from_string(const std::string& name) {
  for (RunMode m : {RunMode::kRandom, RunMode::kSingleTask, RunMode::kMultitask,
                    RunMode::kTransfer, RunMode::kAblateNoTaskEmbedding,
                    RunMode::kAblateFixedArchitecture}) {
    if (to_string(m) == name) return m;
  }
  throw ConfigError("unknown mode '" + name +
                    "' (expected random, single_task, multitask, transfer, "
                    "ablate_no_task_embedding or ablate_fixed_architecture)");
}

bool uses_controller(RunMode mode) {
  return mode != RunMode::kRandom && mode != RunMode::kAblateFixedArchitecture;
}

void validate_run_config(const RunConfig& config) {
  if (config.budget < 1) throw ConfigError("budget must be >= 1");
  if (config.parallelism < 1) throw ConfigError("parallelism must be >= 1");
  if (!(config.optimizer.learning_rate > 0.0) ||
      !std::isfinite(config.optimizer.learning_rate)) {
    throw ConfigError("learning_rate must be positive and finite");
  }
  if (!std::isfinite(config.entropy_weight)) {
    throw ConfigError("entropy_weight must be finite");
  }
  if (!(config.reward_decay > 0.0 && config.reward_decay <= 1.0)) {
    throw ConfigError("reward_decay must lie in (0, 1]");
  }
}

RunResult run_random_search(const SearchSpace& space, const Evaluator& task,
                            const RunConfig& config, const RunHooks& hooks) {
  validate_run_config(config);
  std::vector<const Evaluator*> tasks{&task};
  auto make_job = [&](std::uint64_t k, std::size_t) -> Job {
    return [&space, seed = config.seed, k] {
      Rng rng = make_rng(seed, "rollout", k);
      return Proposal{sample_uniform(space, rng), 0};
    };
  };
  RunResult result;
  result.log = run_trials(
      config, tasks, make_metadata(space, config, tasks), make_job,
      [](const TrialRecord&) { return UpdateOutcome{}; }, [](std::uint64_t) {}, hooks);
  return result;
}

RunResult run_single_task(const SearchSpace& space, const Evaluator& task,
                          const RunConfig& config, const RunHooks& hooks) {
  validate_run_config(config);
  ControllerState state;
  Rng rng = make_rng(config.seed, "controller_init");
  auto params = init_params<double>(space, 1, config.controller, rng);
  state.optimizer = init_optimizer_state(params, config.optimizer.kind);
  state.params = std::make_shared<ControllerParams>(std::move(params));
  state.stats = RewardStats(1, config.reward_decay);
  state.task_ids = {0};
  return controller_loop(space, {&task}, config, hooks, std::move(state));
}

RunResult run_multitask(const SearchSpace& space,
                        const std::vector<const Evaluator*>& tasks,
                        const RunConfig& config, const RunHooks& hooks) {
  validate_run_config(config);
  if (tasks.size() < 2) throw ConfigError("multitask training needs at least two tasks");
  ControllerState state;
  Rng rng = make_rng(config.seed, "controller_init");
  auto params =
      init_params<double>(space, static_cast<int>(tasks.size()), config.controller, rng);
  state.optimizer = init_optimizer_state(params, config.optimizer.kind);
  state.params = std::make_shared<ControllerParams>(std::move(params));
  state.stats = RewardStats(static_cast<int>(tasks.size()), config.reward_decay);
  for (std::size_t j = 0; j < tasks.size(); ++j) state.task_ids.push_back(static_cast<int>(j));
  return controller_loop(space, tasks, config, hooks, std::move(state));
}

RunResult run_transfer(const SearchSpace& space, const Checkpoint& source,
                       const Evaluator& task, const RunConfig& config,
                       const RunHooks& hooks) {
  return transfer_from(space, source, task, config, hooks);
}

RunResult run_ablation_no_task_embedding(const SearchSpace& space,
                                         const Checkpoint& source,
                                         const Evaluator& task,
                                         const RunConfig& config,
                                         const RunHooks& hooks) {
  if (source.params.config.task_conditioning) {
    throw ConfigError(
        "no-task-embedding transfer needs a controller pretrained without task "
        "embeddings");
  }
  return transfer_from(space, source, task, config, hooks);
}

RunResult run_fixed_architecture_transfer(const SearchSpace& space,
                                          const Checkpoint& source,
                                          const Evaluator& task,
                                          const RunConfig& config,
                                          const RunHooks& hooks) {
  validate_run_config(config);
  check_space(space, source);
  if (source.params.config.task_conditioning) {
    throw ConfigError(
        "fixed-architecture transfer needs a controller pretrained without task "
        "embeddings");
  }
  const ModelSpec fixed = greedy_spec(source.params, 0);
  const std::uint64_t version = source.params.version;
  std::vector<const Evaluator*> tasks{&task};
  auto make_job = [&](std::uint64_t, std::size_t) -> Job {
    return [fixed, version] { return Proposal{fixed, version}; };
  };
  RunResult result;
  result.log = run_trials(
      config, tasks, make_metadata(space, config, tasks), make_job,
      [](const TrialRecord&) { return UpdateOutcome{}; }, [](std::uint64_t) {}, hooks);
  result.initial_version = version;
  return result;
}

}  // namespace taml
