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

#ifndef TAML_TASK_ENV_HPP_
#define TAML_TASK_ENV_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "taml/search_space.hpp"
#include "taml/seeding.hpp"

namespace taml {

// Bonus paid when both dimensions take their preferred option.
struct Interaction {
  int first = 0;
  int second = 0;
  double weight = 0.0;
};

// A synthetic task with an additive, separable score:
//   s(m) = base + sum_d w_d [m_d == p_d] + sum_pairs w_ij [m_i == p_i][m_j == p_j]
struct TaskDefinition {
  std::string name;
  int cluster = 0;
  std::vector<int> preferred;
  std::vector<double> weights;
  std::vector<Interaction> interactions;
  double base = 0.0;
  double val_noise_std = 0.0;
  double test_noise_std = 0.0;
  // Validation-set size analog: validation noise std is val_noise_std / sqrt(val_size).
  int val_size = 1;
  // Wall-clock analog charged per evaluation.
  double cost = 1.0;
};

struct Evaluation {
  double validation_reward = 0.0;
  double test_reward = 0.0;
  double cost = 0.0;
};

// Throws ConfigError if the task does not fit the space or its noiseless
// score can leave [0, 1].
void validate_task(const SearchSpace& space, const TaskDefinition& task);

double noiseless_score(const TaskDefinition& task, const ModelSpec& spec);
// Score of the all-preferred spec, which is the global maximum.
double optimal_score(const TaskDefinition& task);
double validation_noise_std(const TaskDefinition& task);

Evaluation evaluate(const SearchSpace& space, const TaskDefinition& task,
                    const ModelSpec& spec, Rng& rng);

// Child-evaluation contract consumed by the trainer: spec in, Evaluation out.
// Implementations must be safe to call concurrently.
class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual Evaluation evaluate(const ModelSpec& spec, std::uint64_t seed) const = 0;
  virtual const std::string& name() const = 0;
};

class SurrogateEvaluator final : public Evaluator {
 public:
  SurrogateEvaluator(SearchSpace space, TaskDefinition task);

  Evaluation evaluate(const ModelSpec& spec, std::uint64_t seed) const override;
  const std::string& name() const override { return task_.name; }
  const TaskDefinition& task() const { return task_; }

 private:
  SearchSpace space_;
  TaskDefinition task_;
};

struct FamilyConfig {
  int clusters = 2;
  int tasks_per_cluster = 4;
  // Dimensions on which tasks of one cluster share a preference. All other
  // dimensions are task-specific.
  std::vector<int> shared_dims;
  // Optional: cluster_preferences[c][k] is cluster c's option on
  // shared_dims[k]. Drawn at random (distinct across clusters where the
  // option count allows) when empty.
  std::vector<std::vector<int>> cluster_preferences;
  // Per-dimension weights; empty means (1 - base) / D on every dimension.
  std::vector<double> weights;
  double base = 0.0;
  double val_noise_std = 0.0;
  double test_noise_std = 0.0;
  int val_size = 1;
  // Appends one extra task (cluster 0) whose preference on this dimension
  // differs from every other task's.
  std::optional<int> outlier_dimension;
  std::string name_prefix = "task";
};

std::vector<TaskDefinition> make_task_family(const SearchSpace& space,
                                             const FamilyConfig& config,
                                             std::uint64_t seed);

}  // namespace taml

#endif  // TAML_TASK_ENV_HPP_
