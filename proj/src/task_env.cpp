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

#include "taml/task_env.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "taml/error.hpp"

namespace taml {
namespace {

constexpr double kScoreSlack = 1e-12;

bool matches(const TaskDefinition& task, const ModelSpec& spec, int d) {
  return spec.choices[d] == task.preferred[d];
}

}  // namespace

void validate_task(const SearchSpace& space, const TaskDefinition& task) {
  const auto where = "task '" + task.name + "': ";
  const int dims = space.num_dimensions();
  if (static_cast<int>(task.preferred.size()) != dims ||
      static_cast<int>(task.weights.size()) != dims) {
    throw ConfigError(where + "preferences and weights need one entry per dimension (" +
                      std::to_string(dims) + ")");
  }
  if (!is_valid_spec(space, ModelSpec{task.preferred})) {
    throw ConfigError(where + "preferred option out of range");
  }
  for (double w : task.weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw ConfigError(where + "weights must be finite and non-negative");
    }
  }
  for (const auto& inter : task.interactions) {
    if (inter.first < 0 || inter.first >= dims || inter.second < 0 ||
        inter.second >= dims || inter.first == inter.second) {
      throw ConfigError(where + "interaction names an invalid dimension pair");
    }
    if (!(inter.weight >= 0.0) || !std::isfinite(inter.weight)) {
      throw ConfigError(where + "interaction weights must be finite and non-negative");
    }
  }
  if (!(task.base >= 0.0) || optimal_score(task) > 1.0 + kScoreSlack) {
    throw ConfigError(where + "base + total weight must lie in [0, 1]");
  }
  if (!(task.val_noise_std >= 0.0) || !(task.test_noise_std >= 0.0) ||
      !std::isfinite(task.val_noise_std) || !std::isfinite(task.test_noise_std)) {
    throw ConfigError(where + "noise std must be finite and non-negative");
  }
  if (task.val_size < 1) throw ConfigError(where + "val_size must be >= 1");
  if (!(task.cost >= 0.0) || !std::isfinite(task.cost)) {
    throw ConfigError(where + "cost must be finite and non-negative");
  }
}

double noiseless_score(const TaskDefinition& task, const ModelSpec& spec) {
  double score = task.base;
  for (std::size_t d = 0; d < task.weights.size(); ++d) {
    if (matches(task, spec, static_cast<int>(d))) score += task.weights[d];
  }
  for (const auto& inter : task.interactions) {
    if (matches(task, spec, inter.first) && matches(task, spec, inter.second)) {
      score += inter.weight;
    }
  }
  return score;
}

double optimal_score(const TaskDefinition& task) {
  double score = task.base;
  for (double w : task.weights) score += w;
  for (const auto& inter : task.interactions) score += inter.weight;
  return score;
}

double validation_noise_std(const TaskDefinition& task) {
  return task.val_noise_std / std::sqrt(static_cast<double>(task.val_size));
}

Evaluation evaluate(const SearchSpace& space, const TaskDefinition& task,
                    const ModelSpec& spec, Rng& rng) {
  validate_spec(space, spec);
  const double score = noiseless_score(task, spec);
  std::normal_distribution<double> standard(0.0, 1.0);
  const double val_noise = validation_noise_std(task) * standard(rng);
  const double test_noise = task.test_noise_std * standard(rng);
  Evaluation e;
  e.validation_reward = std::clamp(score + val_noise, 0.0, 1.0);
  e.test_reward = std::clamp(score + test_noise, 0.0, 1.0);
  e.cost = task.cost;
  return e;
}

SurrogateEvaluator::SurrogateEvaluator(SearchSpace space, TaskDefinition task)
    : space_(std::move(space)), task_(std::move(task)) {
  validate_task(space_, task_);
}

Evaluation SurrogateEvaluator::evaluate(const ModelSpec& spec,
                                        std::uint64_t seed) const {
  Rng rng(seed);
  return taml::evaluate(space_, task_, spec, rng);
}

std::vector<TaskDefinition> make_task_family(const SearchSpace& space,
                                             const FamilyConfig& config,
                                             std::uint64_t seed) {
  const int dims = space.num_dimensions();
  if (config.clusters < 1 || config.tasks_per_cluster < 1) {
    throw ConfigError("task family needs at least one cluster and one task per cluster");
  }
  std::set<int> shared(config.shared_dims.begin(), config.shared_dims.end());
  if (shared.size() != config.shared_dims.size()) {
    throw ConfigError("task family shared_dims has duplicates");
  }
  for (int d : shared) {
    if (d < 0 || d >= dims) {
      throw ConfigError("task family shared dimension " + std::to_string(d) +
                        " out of range");
    }
  }
  if (!config.cluster_preferences.empty()) {
    if (static_cast<int>(config.cluster_preferences.size()) != config.clusters) {
      throw ConfigError("task family cluster_preferences needs one row per cluster");
    }
    for (const auto& row : config.cluster_preferences) {
      if (row.size() != config.shared_dims.size()) {
        throw ConfigError(
            "task family cluster_preferences rows need one entry per shared dimension");
      }
      for (std::size_t k = 0; k < row.size(); ++k) {
        if (row[k] < 0 || row[k] >= space.option_count(config.shared_dims[k])) {
          throw ConfigError("task family cluster preference out of range");
        }
      }
    }
  }
  std::vector<double> weights = config.weights;
  if (weights.empty()) {
    weights.assign(dims, (1.0 - config.base) / dims);
  } else if (static_cast<int>(weights.size()) != dims) {
    throw ConfigError("task family weights need one entry per dimension");
  }
  if (config.outlier_dimension &&
      (*config.outlier_dimension < 0 || *config.outlier_dimension >= dims)) {
    throw ConfigError("task family outlier dimension out of range");
  }

  Rng rng(seed);
  // cluster -> per-dimension preference on shared dims (-1 elsewhere)
  std::vector<std::vector<int>> cluster_prefs(config.clusters, std::vector<int>(dims, -1));
  for (std::size_t k = 0; k < config.shared_dims.size(); ++k) {
    const int d = config.shared_dims[k];
    std::vector<int> order(space.option_count(d));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (int c = 0; c < config.clusters; ++c) {
      cluster_prefs[c][d] = config.cluster_preferences.empty()
                                ? order[c % order.size()]
                                : config.cluster_preferences[c][k];
    }
  }

  auto make_task = [&](int cluster, const std::string& name) {
    TaskDefinition task;
    task.name = name;
    task.cluster = cluster;
    task.weights = weights;
    task.base = config.base;
    task.val_noise_std = config.val_noise_std;
    task.test_noise_std = config.test_noise_std;
    task.val_size = config.val_size;
    for (int d = 0; d < dims; ++d) {
      task.preferred.push_back(
          shared.count(d) ? cluster_prefs[cluster][d]
                          : std::uniform_int_distribution<int>(
                                0, space.option_count(d) - 1)(rng));
    }
    return task;
  };

  std::vector<TaskDefinition> tasks;
  for (int c = 0; c < config.clusters; ++c) {
    for (int k = 0; k < config.tasks_per_cluster; ++k) {
      tasks.push_back(make_task(c, config.name_prefix + "_c" + std::to_string(c) +
                                       "_" + std::to_string(k)));
    }
  }
  if (config.outlier_dimension) {
    const int d = *config.outlier_dimension;
    TaskDefinition outlier = make_task(0, config.name_prefix + "_outlier");
    std::set<int> used;
    for (const auto& t : tasks) used.insert(t.preferred[d]);
    std::vector<int> unused;
    for (int k = 0; k < space.option_count(d); ++k) {
      if (!used.count(k)) unused.push_back(k);
    }
    if (unused.empty()) {
      throw ConfigError("task family outlier: every option of dimension " +
                        std::to_string(d) + " is already preferred by some task");
    }
    outlier.preferred[d] =
        unused[std::uniform_int_distribution<std::size_t>(0, unused.size() - 1)(rng)];
    tasks.push_back(std::move(outlier));
  }
  for (const auto& t : tasks) validate_task(space, t);
  return tasks;
}

}  // namespace taml
