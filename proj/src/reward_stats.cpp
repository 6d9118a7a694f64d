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

#include "taml/reward_stats.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "taml/error.hpp"

namespace taml {

RewardStats::RewardStats(int num_tasks, double decay) : decay_(decay) {
  if (num_tasks < 0) throw ConfigError("negative task count");
  if (!(decay > 0.0 && decay <= 1.0)) {
    throw ConfigError("reward decay must lie in (0, 1]");
  }
  tasks_.resize(num_tasks);
}

void RewardStats::check_task(int task_id) const {
  if (task_id < 0 || task_id >= num_tasks()) {
    throw ConfigError("unknown task id " + std::to_string(task_id));
  }
}

void RewardStats::update(int task_id, double reward) {
  check_task(task_id);
  if (!std::isfinite(reward)) throw NumericError("reward is not finite");
  auto& s = tasks_[task_id];
  if (s.count == 0) {
    s.baseline = reward;
    s.variance = 1.0;
  } else {
    s.baseline = (1.0 - decay_) * s.baseline + decay_ * reward;
    const double centered = reward - s.baseline;
    s.variance = (1.0 - decay_) * s.variance + decay_ * centered * centered;
  }
  s.count += 1;
}

double RewardStats::normalized_advantage(int task_id, double reward) const {
  check_task(task_id);
  const auto& s = tasks_[task_id];
  if (s.count == 0) {
    throw ConfigError("normalized advantage requested before any reward for task " +
                      std::to_string(task_id));
  }
  if (!std::isfinite(reward)) throw NumericError("reward is not finite");
  return (reward - s.baseline) / std::max(std::sqrt(s.variance), kStdFloor);
}

const TaskRewardStats& RewardStats::task(int task_id) const {
  check_task(task_id);
  return tasks_[task_id];
}

int RewardStats::add_task() {
  tasks_.emplace_back();
  return num_tasks() - 1;
}

void RewardStats::restore(int task_id, const TaskRewardStats& stats) {
  check_task(task_id);
  if (!std::isfinite(stats.baseline) || !std::isfinite(stats.variance) ||
      stats.variance < 0.0) {
    throw ConfigError("restored reward statistics must be finite with variance >= 0");
  }
  tasks_[task_id] = stats;
}

}  // namespace taml
