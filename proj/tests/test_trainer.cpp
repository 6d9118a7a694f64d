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

#include <doctest.h>

#include <chrono>
#include <cstring>
#include <map>
#include <set>
#include <stdexcept>
#include <thread>

#include "oracles.hpp"
#include "taml/error.hpp"
#include "taml/seeding.hpp"
#include "taml/trainer.hpp"

using namespace taml;

namespace {

TaskDefinition toy_task(const SearchSpace& space, std::vector<int> preferred,
                        std::string name = "toy") {
  TaskDefinition t;
  t.name = std::move(name);
  t.preferred = std::move(preferred);
  t.weights.assign(space.num_dimensions(), 1.0 / space.num_dimensions());
  return t;
}

// Delegates to a surrogate, sleeping a seed-dependent time and failing on a
// seed-dependent subset of calls.
class FlakyEvaluator final : public Evaluator {
 public:
  FlakyEvaluator(SearchSpace space, TaskDefinition task, int fail_every, int max_sleep_us)
      : inner_(std::move(space), std::move(task)),
        fail_every_(fail_every),
        max_sleep_us_(max_sleep_us) {}
  Evaluation evaluate(const ModelSpec& spec, std::uint64_t seed) const override {
    if (max_sleep_us_ > 0) {
      std::this_thread::sleep_for(std::chrono::microseconds(seed % max_sleep_us_));
    }
    if (fail_every_ > 0 && (seed >> 7) % fail_every_ == 0) {
      throw std::runtime_error("child training diverged");
    }
    return inner_.evaluate(spec, seed);
  }
  const std::string& name() const override { return inner_.name(); }

 private:
  SurrogateEvaluator inner_;
  int fail_every_;
  int max_sleep_us_;
};

bool same_params(const ControllerParams& a, const ControllerParams& b) {
  if (!same_shapes(a.tensors, b.tensors) || a.version != b.version) return false;
  bool equal = true;
  visit_tensors(
      [&](const std::string&, const auto& x, const auto& y) {
        equal = equal && std::memcmp(x.data(), y.data(), sizeof(double) * x.size()) == 0;
      },
      a.tensors, b.tensors);
  return equal;
}

// Exact per-dimension marginals by enumeration.
std::vector<std::vector<double>> marginals(const SearchSpace& space,
                                           const ControllerParams& params, int task) {
  std::vector<std::vector<double>> m;
  for (int c : space.option_counts()) m.emplace_back(c, 0.0);
  for_each_spec(space, [&](const ModelSpec& s) {
    const double p = std::exp(log_prob(params, task, s).total_log_prob);
    for (int d = 0; d < space.num_dimensions(); ++d) m[d][s.choices[d]] += p;
  });
  return m;
}

RunConfig small_config(RunMode mode, std::uint64_t budget, std::uint64_t seed) {
  RunConfig c;
  c.mode = mode;
  c.budget = budget;
  c.seed = seed;
  c.controller.embedding_size = 8;
  c.controller.hidden_size = 12;
  c.optimizer.learning_rate = 5e-3;
  return c;
}

}  // namespace

TEST_CASE("random search hits the optimum at the closed-form rate") {
  const auto space = SearchSpace::from_counts({4, 4});
  const SurrogateEvaluator eval(space, toy_task(space, {2, 1}));
  int hits = 0;
  const int runs = 400;
  for (int seed = 0; seed < runs; ++seed) {
    const auto result = run_random_search(space, eval, small_config(RunMode::kRandom, 16, seed));
    REQUIRE(result.log.size() == 16);
    bool found = false;
    for (const auto& r : result.log.records()) found = found || r.spec.choices == std::vector<int>{2, 1};
    hits += found;
  }
  const double expected = 1.0 - std::pow(15.0 / 16.0, 16);
  CHECK(expected == doctest::Approx(0.6439).epsilon(1e-4));
  CHECK(std::abs(hits / double(runs) - expected) <= 0.05);
}

TEST_CASE("budget and config validation") {
  const auto space = SearchSpace::from_counts({3, 3});
  const SurrogateEvaluator eval(space, toy_task(space, {0, 0}));
  const auto one = run_single_task(space, eval, small_config(RunMode::kSingleTask, 1, 3));
  REQUIRE(one.log.size() == 1);
  CHECK(one.log.records()[0].trial == 0);
  CHECK(one.params->version == 1);
  CHECK(run_random_search(space, eval, small_config(RunMode::kRandom, 1, 3)).log.size() == 1);

  auto zero = small_config(RunMode::kSingleTask, 0, 3);
  CHECK_THROWS_AS(run_single_task(space, eval, zero), Error);
  auto no_workers = small_config(RunMode::kSingleTask, 5, 3);
  no_workers.parallelism = 0;
  CHECK_THROWS_AS(run_single_task(space, eval, no_workers), Error);
  CHECK_THROWS_AS(run_multitask(space, {&eval}, small_config(RunMode::kMultitask, 5, 3)), Error);
  CHECK(mode_from_string("ablate_fixed_architecture") == RunMode::kAblateFixedArchitecture);
  CHECK_THROWS_AS(mode_from_string("rl"), Error);
}

TEST_CASE("sequential runs replay exactly") {
  const auto space = SearchSpace::from_counts({3, 4, 2});
  auto task = toy_task(space, {1, 3, 0});
  task.val_noise_std = 0.05;
  task.test_noise_std = 0.05;
  const SurrogateEvaluator eval(space, task);
  const auto a = run_single_task(space, eval, small_config(RunMode::kSingleTask, 120, 9));
  const auto b = run_single_task(space, eval, small_config(RunMode::kSingleTask, 120, 9));
  CHECK(a.log == b.log);
  CHECK(serialize_trial_log(a.log) == serialize_trial_log(b.log));
  CHECK(same_params(*a.params, *b.params));
  const auto c = run_single_task(space, eval, small_config(RunMode::kSingleTask, 120, 10));
  CHECK(!(c.log == a.log));
  const auto r1 = run_random_search(space, eval, small_config(RunMode::kRandom, 50, 4));
  const auto r2 = run_random_search(space, eval, small_config(RunMode::kRandom, 50, 4));
  CHECK(r1.log == r2.log);
}

TEST_CASE("one update per successful completion and bounded staleness") {
  const auto space = SearchSpace::from_counts({3, 3, 3});
  auto task = toy_task(space, {2, 0, 1});
  task.val_noise_std = 0.1;
  for (int workers : {1, 3, 8}) {
    const FlakyEvaluator eval(space, task, 4, workers > 1 ? 1500 : 0);
    auto config = small_config(RunMode::kSingleTask, 200, 21);
    config.parallelism = workers;
    const auto result = run_single_task(space, eval, config);
    REQUIRE(result.log.size() == 200);
    std::uint64_t successes = 0;
    std::set<std::uint64_t> indices;
    bool stale_ok = true;
    for (const auto& r : result.log.records()) {
      indices.insert(r.trial);
      // Version at completion is the number of earlier successful updates.
      stale_ok = stale_ok && r.version + static_cast<std::uint64_t>(workers) >= successes;
      if (workers == 1) CHECK(r.version == successes);
      successes += !r.failed;
    }
    CHECK(stale_ok);
    CHECK(indices.size() == 200);
    CHECK(*indices.rbegin() == 199);
    CHECK(successes < 200);
    CHECK(successes > 100);
    CHECK(result.params->version == successes);
    CHECK(result.reward_stats->task(0).count == successes);
  }
}

TEST_CASE("failed trials leave the controller and statistics untouched") {
  const auto space = SearchSpace::from_counts({3, 3});
  const FlakyEvaluator eval(space, toy_task(space, {1, 1}), 3, 0);
  auto config = small_config(RunMode::kSingleTask, 60, 5);
  config.checkpoint_every = 1;
  std::vector<ControllerParams> snapshots;
  std::vector<std::optional<TaskRewardStats>> stats;
  std::vector<bool> failed;
  RunHooks hooks;
  hooks.on_trial = [&](const TrialStatus& s) {
    failed.push_back(s.record.failed);
    stats.push_back(s.stats);
    if (s.record.failed) {
      CHECK(!s.advantage);
      CHECK(std::isnan(s.record.validation_reward) == false);
    }
  };
  hooks.on_checkpoint = [&](std::uint64_t completed, const ControllerParams& p,
                            const OptimizerState&) {
    CHECK(completed == snapshots.size() + 1);
    snapshots.push_back(p);
  };
  const auto result = run_single_task(space, eval, config, hooks);
  REQUIRE(snapshots.size() == 60);
  int failures = 0;
  for (std::size_t i = 1; i < snapshots.size(); ++i) {
    if (failed[i]) {
      ++failures;
      CHECK(same_params(snapshots[i], snapshots[i - 1]));
      CHECK(!stats[i]);
    } else {
      CHECK(snapshots[i].version == snapshots[i - 1].version + 1);
    }
  }
  CHECK(failures > 5);
  CHECK(result.log.records()[1].failed == failed[1]);
}

TEST_CASE("multitask samples tasks uniformly and touches one embedding row per update") {
  const auto space = SearchSpace::from_counts({2, 2});
  std::vector<SurrogateEvaluator> evals;
  for (int k = 0; k < 4; ++k) {
    evals.emplace_back(space, toy_task(space, {k % 2, k / 2}, "t" + std::to_string(k)));
  }
  std::vector<const Evaluator*> ptrs;
  for (const auto& e : evals) ptrs.push_back(&e);
  auto config = small_config(RunMode::kMultitask, 10000, 2);
  config.controller.embedding_size = 4;
  config.controller.hidden_size = 4;
  config.controller.num_layers = 1;
  const auto result = run_multitask(space, ptrs, config);
  std::vector<int> counts(4, 0);
  for (const auto& r : result.log.records()) ++counts[r.task];
  for (int c : counts) CHECK(std::abs(c / 10000.0 - 0.25) <= 0.02);
  CHECK(result.log.metadata().task_names == std::vector<std::string>{"t0", "t1", "t2", "t3"});

  auto short_config = config;
  short_config.budget = 40;
  short_config.checkpoint_every = 1;
  std::vector<Eigen::MatrixXd> tables;
  RunHooks hooks;
  hooks.on_checkpoint = [&](std::uint64_t, const ControllerParams& p, const OptimizerState&) {
    tables.push_back(p.tensors.task_embeddings);
  };
  const auto short_run = run_multitask(space, ptrs, short_config, hooks);
  for (std::size_t i = 1; i < tables.size(); ++i) {
    const int task = short_run.log.records()[i].task;
    for (int row = 0; row < 4; ++row) {
      const bool moved = tables[i].row(row) != tables[i - 1].row(row);
      CHECK(moved == (row == task));
    }
  }
}

TEST_CASE("a large entropy bonus keeps the policy near uniform") {
  const auto space = SearchSpace::from_counts({4, 4});
  const SurrogateEvaluator eval(space, toy_task(space, {3, 0}));
  auto config = small_config(RunMode::kSingleTask, 500, 8);
  config.optimizer.learning_rate = 1e-2;
  config.entropy_weight = 10.0;
  const auto kept = run_single_task(space, eval, config);
  double worst = 0;
  for (const auto& dim : marginals(space, *kept.params, 0)) {
    for (double p : dim) worst = std::max(worst, std::abs(p - 0.25));
  }
  CHECK(worst <= 0.05);

  // Without the bonus the same run commits to the preferred options.
  config.entropy_weight = 0.0;
  const auto free = run_single_task(space, eval, config);
  const auto m = marginals(space, *free.params, 0);
  CHECK(m[0][3] > 0.5);
  CHECK(m[1][0] > 0.5);
}

TEST_CASE("transfer") {
  const auto space = SearchSpace::from_counts({3, 3});
  std::vector<SurrogateEvaluator> evals;
  for (int k = 0; k < 3; ++k) {
    evals.emplace_back(space, toy_task(space, {k, 2 - k}, "t" + std::to_string(k)));
  }
  std::vector<const Evaluator*> ptrs{&evals[0], &evals[1], &evals[2]};
  const auto pretrain = run_multitask(space, ptrs, small_config(RunMode::kMultitask, 90, 1));
  const Checkpoint source{space.content_hash(), *pretrain.params, *pretrain.optimizer};
  const SurrogateEvaluator target(space, toy_task(space, {1, 1}, "new"));

  SUBCASE("appends a task and continues the version sequence") {
    const auto result = run_transfer(space, source, target, small_config(RunMode::kTransfer, 30, 2));
    CHECK(result.controller_task_ids == std::vector<int>{3});
    CHECK(result.params->num_tasks() == 4);
    CHECK(result.initial_version == 90);
    CHECK(result.params->version == 120);
    CHECK(result.log.records().front().version == 90);
    // Old task rows get no gradient, so they stay put.
    CHECK(result.params->tensors.task_embeddings.topRows(3) ==
          source.params.tensors.task_embeddings);
    CHECK(result.params->tensors.skip != source.params.tensors.skip);
    CHECK(result.reward_stats->num_tasks() == 1);
  }
  SUBCASE("frozen shared weights") {
    auto config = small_config(RunMode::kTransfer, 30, 2);
    config.freeze_shared = true;
    const auto result = run_transfer(space, source, target, config);
    auto trained = result.params->tensors;
    auto original = source.params.tensors;
    CHECK(trained.task_embeddings.topRows(3) == original.task_embeddings);
    trained.task_embeddings = original.task_embeddings;
    bool unchanged = true;
    visit_tensors([&](const std::string&, const auto& x, const auto& y) {
      unchanged = unchanged && x == y;
    }, trained, original);
    CHECK(unchanged);
    CHECK(result.params->version == 120);
  }
  SUBCASE("wrong space fails before any trial") {
    const auto other = SearchSpace::from_counts({3, 4});
    const SurrogateEvaluator other_target(other, toy_task(other, {1, 1}, "new"));
    int trials = 0;
    RunHooks hooks;
    hooks.on_trial = [&](const TrialStatus&) { ++trials; };
    try {
      run_transfer(other, source, other_target, small_config(RunMode::kTransfer, 5, 2), hooks);
      FAIL("expected mismatch");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kMismatch);
    }
    CHECK(trials == 0);
  }
  SUBCASE("ablations need a task-agnostic source") {
    CHECK_THROWS_AS(run_ablation_no_task_embedding(space, source, target,
                                                   small_config(RunMode::kAblateNoTaskEmbedding, 5, 2)),
                    Error);
    CHECK_THROWS_AS(run_fixed_architecture_transfer(space, source, target,
                                                    small_config(RunMode::kAblateFixedArchitecture, 5, 2)),
                    Error);
  }
}

TEST_CASE("task-agnostic ablations") {
  const auto space = SearchSpace::from_counts({3, 3});
  std::vector<SurrogateEvaluator> evals;
  for (int k = 0; k < 2; ++k) {
    evals.emplace_back(space, toy_task(space, {k, k}, "t" + std::to_string(k)));
  }
  auto config = small_config(RunMode::kMultitask, 60, 4);
  config.controller.task_conditioning = false;
  const auto pretrain = run_multitask(space, {&evals[0], &evals[1]}, config);
  CHECK(pretrain.params->tensors.task_embeddings ==
        init_params<double>(space, 2, config.controller,
                            *std::make_unique<Rng>(make_rng(4, "controller_init")))
            .tensors.task_embeddings);
  const Checkpoint source{space.content_hash(), *pretrain.params, *pretrain.optimizer};
  auto noisy = toy_task(space, {2, 2}, "new");
  noisy.val_noise_std = 0.05;
  noisy.test_noise_std = 0.05;
  const SurrogateEvaluator target(space, noisy);

  SUBCASE("fixed architecture evaluates one spec") {
    const auto result = run_fixed_architecture_transfer(
        space, source, target, small_config(RunMode::kAblateFixedArchitecture, 25, 6));
    std::set<std::vector<int>> specs;
    for (const auto& r : result.log.records()) specs.insert(r.spec.choices);
    CHECK(specs.size() == 1);
    CHECK(*specs.begin() == greedy_spec(source.params, 0).choices);
    CHECK(!result.params);
    std::set<double> rewards;
    for (const auto& r : result.log.records()) rewards.insert(r.validation_reward);
    CHECK(rewards.size() > 1);  // re-evaluation noise only
  }
  SUBCASE("no-task-embedding transfer keeps the task input at zero") {
    auto tconfig = small_config(RunMode::kAblateNoTaskEmbedding, 30, 6);
    const auto result = run_ablation_no_task_embedding(space, source, target, tconfig);
    CHECK(result.log.size() == 30);
    CHECK(!result.params->config.task_conditioning);
    Rng a(1), b(1);
    CHECK(sample_rollout(*result.params, 0, a).spec == sample_rollout(*result.params, 2, b).spec);
  }
}

TEST_CASE("parallel runs complete every trial") {
  const auto space = SearchSpace::from_counts({3, 3});
  std::vector<SurrogateEvaluator> evals;
  for (int k = 0; k < 3; ++k) {
    evals.emplace_back(space, toy_task(space, {k, k}, "t" + std::to_string(k)));
  }
  auto config = small_config(RunMode::kMultitask, 150, 11);
  config.parallelism = 6;
  const auto result = run_multitask(space, {&evals[0], &evals[1], &evals[2]}, config);
  CHECK(result.log.size() == 150);
  CHECK(result.params->version == 150);
  // Task choice depends only on the dispatch index, so the multiset of tasks
  // matches the sequential run.
  config.parallelism = 1;
  const auto sequential = run_multitask(space, {&evals[0], &evals[1], &evals[2]}, config);
  std::vector<int> a(3, 0), b(3, 0);
  for (const auto& r : result.log.records()) ++a[r.task];
  for (const auto& r : sequential.log.records()) ++b[r.task];
  CHECK(a == b);
}
