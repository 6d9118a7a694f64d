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

#ifndef TAML_TRIAL_LOG_HPP_
#define TAML_TRIAL_LOG_HPP_

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "taml/search_space.hpp"

namespace taml {

struct TrialRecord {
  // Global index in completion order.
  std::uint64_t trial = 0;
  int task = 0;
  ModelSpec spec;
  double validation_reward = 0.0;
  double test_reward = 0.0;
  // Controller version the spec was sampled from.
  std::uint64_t version = 0;
  double wall_cost = 0.0;
  // Simulated clock: cumulative wall cost at completion.
  double timestamp = 0.0;
  bool failed = false;

  friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

struct RunMetadata {
  std::string mode;
  std::uint64_t seed = 0;
  std::string space_hash;
  std::string config_digest;
  std::vector<std::string> task_names;

  friend bool operator==(const RunMetadata&, const RunMetadata&) = default;
};

// Append-only; trial indices strictly increasing.
class TrialLog {
 public:
  TrialLog() = default;
  explicit TrialLog(RunMetadata metadata) : metadata_(std::move(metadata)) {}

  void append(TrialRecord record);

  const RunMetadata& metadata() const { return metadata_; }
  RunMetadata& metadata() { return metadata_; }
  const std::vector<TrialRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  friend bool operator==(const TrialLog&, const TrialLog&) = default;

 private:
  RunMetadata metadata_;
  std::vector<TrialRecord> records_;
};

// Line-delimited JSON: a header object with run metadata, then one object per
// trial with fields trial, task, spec, val, test, version, wall_cost, time,
// failed.
std::string header_line(const RunMetadata& metadata);
std::string record_line(const TrialRecord& record);
std::string serialize_trial_log(const TrialLog& log);
TrialLog parse_trial_log(const std::string& text);

void write_trial_log(const std::string& path, const TrialLog& log);
TrialLog read_trial_log(const std::string& path);

// Streams a log to disk as records arrive.
class TrialLogWriter {
 public:
  TrialLogWriter(const std::string& path, const RunMetadata& metadata);
  void append(const TrialRecord& record);

 private:
  std::string path_;
  std::ofstream out_;
};

}  // namespace taml

#endif  // TAML_TRIAL_LOG_HPP_
