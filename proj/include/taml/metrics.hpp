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

#ifndef TAML_METRICS_HPP_
#define TAML_METRICS_HPP_

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "taml/controller.hpp"
#include "taml/trial_log.hpp"

namespace taml {

inline constexpr int kDefaultTopN = 10;
inline constexpr std::size_t kDefaultStride = 5;

struct TopN {
  double validation = 0.0;
  double test = 0.0;
};

// Among the first `up_to_trials` records (all by default), selects the N
// highest validation rewards (earlier trial wins ties) and averages their
// validation and test rewards. Failed trials are skipped. Throws ConfigError
// when no successful trial is in range.
TopN accuracy_top_n(const TrialLog& log, int n,
                    std::optional<std::size_t> up_to_trials = std::nullopt);

// Running best-N set, fed one record at a time.
class TopNTracker {
 public:
  explicit TopNTracker(int n);
  void add(const TrialRecord& record);
  bool empty() const { return best_.empty(); }
  TopN value() const;

 private:
  struct Entry {
    double validation;
    double test;
    std::uint64_t trial;
    // Best first: higher validation, then earlier trial.
    bool operator<(const Entry& other) const {
      if (validation != other.validation) return validation > other.validation;
      return trial < other.trial;
    }
  };
  int n_;
  std::set<Entry> best_;
  double validation_sum_ = 0.0;
  double test_sum_ = 0.0;
};

struct CurvePoint {
  std::size_t trials = 0;
  double validation = 0.0;
  double test = 0.0;
};

// One row every `stride` trials, plus the final trial count when it is not a
// multiple of the stride.
std::vector<CurvePoint> learning_curve(const TrialLog& log, int n,
                                       std::size_t stride);

// Smallest evaluated trial count t whose validation accuracy-topN over the
// first t trials reaches theta.
std::optional<std::size_t> trials_to_threshold(const TrialLog& log, double theta,
                                               int n = kDefaultTopN,
                                               std::size_t stride = kDefaultStride);

// Cosine similarity between task-embedding rows; zero vectors map to 0 and
// the diagonal is 1.
Eigen::MatrixXd embedding_similarity(const ControllerParams& params);

std::string learning_curve_csv(const std::vector<CurvePoint>& rows);
std::string similarity_csv(const Eigen::MatrixXd& similarity,
                           const std::vector<std::string>& names);

}  // namespace taml

#endif  // TAML_METRICS_HPP_
