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

#ifndef TAML_SEEDING_HPP_
#define TAML_SEEDING_HPP_

#include <cstdint>
#include <random>
#include <string_view>

namespace taml {

using Rng = std::mt19937_64;

// Seed derivation tree. Every random stream in a run is a child of the root
// seed, keyed by a label and an optional index:
//   root -> "controller_init"          controller parameters
//   root -> "task_family"              surrogate family (unless pinned)
//   root -> "task_choice", i           multitask task draw for trial i
//   root -> "rollout", i               rollout sampling for trial i
//   root -> <task name>, i             evaluator noise for trial i
//   root -> "transfer_embedding"       new task row on transfer
std::uint64_t derive_seed(std::uint64_t root, std::string_view label,
                          std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t root, std::string_view label,
                    std::uint64_t index = 0) {
  return Rng(derive_seed(root, label, index));
}

}  // namespace taml

#endif  // TAML_SEEDING_HPP_
