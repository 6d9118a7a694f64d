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

#include "taml/trial_log.hpp"

#include <sstream>

#include <json.hpp>

#include "taml/error.hpp"

namespace taml {
namespace {

using nlohmann::json;

constexpr int kLogFormat = 1;

TrialRecord record_from_json(const json& j) {
  TrialRecord r;
  r.trial = j.at("trial").get<std::uint64_t>();
  r.task = j.at("task").get<int>();
  r.spec.choices = j.at("spec").get<std::vector<int>>();
  r.failed = j.at("failed").get<bool>();
  if (!r.failed) {
    r.validation_reward = j.at("val").get<double>();
    r.test_reward = j.at("test").get<double>();
  }
  r.version = j.at("version").get<std::uint64_t>();
  r.wall_cost = j.at("wall_cost").get<double>();
  r.timestamp = j.at("time").get<double>();
  return r;
}

}  // namespace

void TrialLog::append(TrialRecord record) {
  if (!records_.empty() && record.trial <= records_.back().trial) {
    throw ConfigError("trial index " + std::to_string(record.trial) +
                      " does not follow " + std::to_string(records_.back().trial));
  }
  records_.push_back(std::move(record));
}

std::string header_line(const RunMetadata& m) {
  json j;
  j["taml_trial_log"] = kLogFormat;
  j["mode"] = m.mode;
  j["seed"] = m.seed;
  j["space_hash"] = m.space_hash;
  j["config_digest"] = m.config_digest;
  j["tasks"] = m.task_names;
  return j.dump();
}

std::string record_line(const TrialRecord& r) {
  json j;
  j["trial"] = r.trial;
  j["task"] = r.task;
  j["spec"] = r.spec.choices;
  if (r.failed) {
    j["val"] = nullptr;
    j["test"] = nullptr;
  } else {
    j["val"] = r.validation_reward;
    j["test"] = r.test_reward;
  }
  j["version"] = r.version;
  j["wall_cost"] = r.wall_cost;
  j["time"] = r.timestamp;
  j["failed"] = r.failed;
  return j.dump();
}

std::string serialize_trial_log(const TrialLog& log) {
  std::string out = header_line(log.metadata()) + "\n";
  for (const auto& r : log.records()) out += record_line(r) + "\n";
  return out;
}

TrialLog parse_trial_log(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  TrialLog log;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      if (!have_header) {
        if (!j.contains("taml_trial_log") || j.at("taml_trial_log").get<int>() != kLogFormat) {
          throw CorruptError("line 1: missing trial log header");
        }
        RunMetadata m;
        m.mode = j.at("mode").get<std::string>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.space_hash = j.at("space_hash").get<std::string>();
        m.config_digest = j.at("config_digest").get<std::string>();
        m.task_names = j.at("tasks").get<std::vector<std::string>>();
        log = TrialLog(std::move(m));
        have_header = true;
      } else {
        log.append(record_from_json(j));
      }
    } catch (const json::exception& e) {
      throw CorruptError("trial log line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::kCorrupt) throw;
      throw CorruptError("trial log line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!have_header) throw CorruptError("trial log is empty");
  return log;
}

void write_trial_log(const std::string& path, const TrialLog& log) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write trial log '" + path + "'");
  out << serialize_trial_log(log);
  if (!out) throw IoError("failed writing trial log '" + path + "'");
}

TrialLog read_trial_log(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open trial log '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_trial_log(text.str());
}

TrialLogWriter::TrialLogWriter(const std::string& path, const RunMetadata& metadata)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw IoError("cannot write trial log '" + path + "'");
  out_ << header_line(metadata) << "\n";
  out_.flush();
}

void TrialLogWriter::append(const TrialRecord& record) {
  out_ << record_line(record) << "\n";
  out_.flush();
  if (!out_) throw IoError("failed writing trial log '" + path_ + "'");
}

}  // namespace taml
