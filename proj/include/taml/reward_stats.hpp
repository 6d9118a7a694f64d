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

#ifndef TAML_REWARD_STATS_HPP_
#define TAML_REWARD_STATS_HPP_

#include <cstdint>
#include <vector>

namespace taml {

struct TaskRewardStats {
  double baseline = 0.0;
  double variance = 0.0;
  std::uint64_t count = 0;
};

// Per-task exponential moving averages of reward mean and variance.
class RewardStats {
 public:
  static constexpr double kDefaultDecay = 0.01;
  static constexpr double kStdFloor = 1e-6;

  explicit RewardStats(int num_tasks, double decay = kDefaultDecay);

  // First observation: baseline = R, variance = 1. Afterwards
  //   b <- (1 - a) b + a R
  //   s2 <- (1 - a) s2 + a (R - b)^2     (with the already-updated b)
  void update(int task_id, double reward);

  // (R - b) / max(sqrt(s2), 1e-6). Requires at least one update for the task.
  double normalized_advantage(int task_id, double reward) const;

  const TaskRewardStats& task(int task_id) const;
  int num_tasks() const { return static_cast<int>(tasks_.size()); }
  double decay() const { return decay_; }
  int add_task();
  // Replaces one task's statistics, e.g. when resuming from saved state.
  void restore(int task_id, const TaskRewardStats& stats);

 private:
  void check_task(int task_id) const;

  std::vector<TaskRewardStats> tasks_;
  double decay_;
};

}  // namespace taml

#endif  // TAML_REWARD_STATS_HPP_
