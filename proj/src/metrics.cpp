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

#include "taml/metrics.hpp"

#include <algorithm>
#include <sstream>

#include "taml/error.hpp"

namespace taml {
namespace {

std::string format_double(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

}  // namespace

TopN accuracy_top_n(const TrialLog& log, int n,
                    std::optional<std::size_t> up_to_trials) {
  if (n < 1) throw ConfigError("top-N needs N >= 1");
  const std::size_t limit = std::min(up_to_trials.value_or(log.size()), log.size());
  std::vector<const TrialRecord*> ok;
  for (std::size_t i = 0; i < limit; ++i) {
    if (!log.records()[i].failed) ok.push_back(&log.records()[i]);
  }
  if (ok.empty()) throw ConfigError("accuracy-topN of an empty trial log");
  const std::size_t take = std::min<std::size_t>(n, ok.size());
  std::partial_sort(ok.begin(), ok.begin() + take, ok.end(),
                    [](const TrialRecord* a, const TrialRecord* b) {
                      if (a->validation_reward != b->validation_reward) {
                        return a->validation_reward > b->validation_reward;
                      }
                      return a->trial < b->trial;
                    });
  TopN out;
  for (std::size_t i = 0; i < take; ++i) {
    out.validation += ok[i]->validation_reward;
    out.test += ok[i]->test_reward;
  }
  out.validation /= static_cast<double>(take);
  out.test /= static_cast<double>(take);
  return out;
}

TopNTracker::TopNTracker(int n) : n_(n) {
  if (n < 1) throw ConfigError("top-N needs N >= 1");
}

void TopNTracker::add(const TrialRecord& record) {
  if (record.failed) return;
  const Entry entry{record.validation_reward, record.test_reward, record.trial};
  if (static_cast<int>(best_.size()) == n_) {
    auto worst = std::prev(best_.end());
    if (!(entry < *worst)) return;
    validation_sum_ -= worst->validation;
    test_sum_ -= worst->test;
    best_.erase(worst);
  }
  best_.insert(entry);
  validation_sum_ += entry.validation;
  test_sum_ += entry.test;
}

TopN TopNTracker::value() const {
  if (best_.empty()) throw ConfigError("accuracy-topN of an empty trial log");
  // Re-summing keeps the value independent of insertion history.
  TopN out;
  for (const auto& e : best_) {
    out.validation += e.validation;
    out.test += e.test;
  }
  out.validation /= static_cast<double>(best_.size());
  out.test /= static_cast<double>(best_.size());
  return out;
}

std::vector<CurvePoint> learning_curve(const TrialLog& log, int n,
                                       std::size_t stride) {
  if (stride < 1) throw ConfigError("learning curve stride must be >= 1");
  TopNTracker tracker(n);
  std::vector<CurvePoint> rows;
  const auto& records = log.records();
  for (std::size_t i = 0; i < records.size(); ++i) {
    tracker.add(records[i]);
    const std::size_t t = i + 1;
    if ((t % stride == 0 || t == records.size()) && !tracker.empty()) {
      const TopN v = tracker.value();
      rows.push_back({t, v.validation, v.test});
    }
  }
  return rows;
}

std::optional<std::size_t> trials_to_threshold(const TrialLog& log, double theta,
                                               int n, std::size_t stride) {
  for (const auto& row : learning_curve(log, n, stride)) {
    if (row.validation >= theta) return row.trials;
  }
  return std::nullopt;
}

Eigen::MatrixXd embedding_similarity(const ControllerParams& params) {
  const Eigen::MatrixXd& e = params.tensors.task_embeddings;
  const Eigen::Index tasks = e.rows();
  const Eigen::VectorXd norms = e.rowwise().norm();
  Eigen::MatrixXd sim = Eigen::MatrixXd::Zero(tasks, tasks);
  for (Eigen::Index i = 0; i < tasks; ++i) {
    sim(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < tasks; ++j) {
      double c = 0.0;
      if (norms[i] > 0.0 && norms[j] > 0.0) {
        c = std::clamp(e.row(i).dot(e.row(j)) / (norms[i] * norms[j]), -1.0, 1.0);
      }
      sim(i, j) = sim(j, i) = c;
    }
  }
  return sim;
}

std::string learning_curve_csv(const std::vector<CurvePoint>& rows) {
  std::string out = "trial,val_topN,test_topN\n";
  for (const auto& r : rows) {
    out += std::to_string(r.trials) + "," + format_double(r.validation) + "," +
           format_double(r.test) + "\n";
  }
  return out;
}

std::string similarity_csv(const Eigen::MatrixXd& similarity,
                           const std::vector<std::string>& names) {
  if (static_cast<Eigen::Index>(names.size()) != similarity.rows()) {
    throw ConfigError("similarity export needs one name per task");
  }
  std::string out = "task";
  for (const auto& name : names) out += "," + name;
  out += "\n";
  for (Eigen::Index i = 0; i < similarity.rows(); ++i) {
    out += names[i];
    for (Eigen::Index j = 0; j < similarity.cols(); ++j) {
      out += "," + format_double(similarity(i, j));
    }
    out += "\n";
  }
  return out;
}

}  // namespace taml
