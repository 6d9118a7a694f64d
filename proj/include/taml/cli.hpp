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

#ifndef TAML_CLI_HPP_
#define TAML_CLI_HPP_

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "taml/config.hpp"

namespace taml {

struct CliInvocation {
  // run | inspect-checkpoint | metrics | validate-config
  std::string subcommand;
  std::string config_path;
  ConfigOverrides overrides;
  std::optional<std::string> out_dir;
  // Checkpoint (inspect-checkpoint) or trial log (metrics).
  std::string input_path;
  std::optional<int> top_n;
  std::optional<std::size_t> stride;
  bool quiet = false;
};

// Output directory for `run`: --out, else $TAML_OUT/<mode>-seed<seed>, else
// ./taml_runs/<mode>-seed<seed>.
std::string resolve_out_dir(const CliInvocation& invocation,
                            const ExperimentConfig& config);

// Parses argv and dispatches. Returns the process exit status: 0 on success,
// 2 for config/usage errors, 3 for IO errors, 4 for numeric failures.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace taml

#endif  // TAML_CLI_HPP_
