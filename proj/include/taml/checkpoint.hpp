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

#ifndef TAML_CHECKPOINT_HPP_
#define TAML_CHECKPOINT_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "taml/controller.hpp"
#include "taml/hash.hpp"
#include "taml/optimizer.hpp"
#include "taml/search_space.hpp"

namespace taml {

// Binary layout, all integers and floats little-endian:
//   "TAMLCKPT"  u32 format version  32-byte space hash
//   u64 n_tasks  u64 n_dims  u64 option_count[n_dims]
//   u32 embedding_size  u32 hidden_size  u32 num_layers  u32 flags
//   f64 init_range  u64 parameter_version  u32 optimizer  u64 optimizer_step
//   u32 n_tensors, then per tensor:
//     u32 name_len  name  u64 rows  u64 cols  f64 data[rows*cols] (col-major)
//   32-byte SHA-256 of every preceding byte.
// Adam moments are stored as tensors named "adam_m/<name>" and "adam_v/<name>".
inline constexpr char kCheckpointMagic[8] = {'T', 'A', 'M', 'L',
                                             'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  Digest space_hash{};
  ControllerParams params;
  OptimizerState optimizer;
};

struct CheckpointInfo {
  std::uint32_t format_version = 0;
  Digest space_hash{};
  std::uint64_t num_tasks = 0;
  std::vector<int> option_counts;
  ControllerConfig config;
  std::uint64_t parameter_version = 0;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  std::uint64_t optimizer_step = 0;
  std::uint64_t num_tensors = 0;
};

std::vector<std::uint8_t> encode_checkpoint(const ControllerParams& params,
                                            const OptimizerState& optimizer,
                                            const Digest& space_hash);

// Throws CorruptError on malformed bytes and MismatchError when the bytes were
// written for a different space. Nothing is returned on failure.
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes,
                             const SearchSpace& space);
CheckpointInfo decode_checkpoint_info(const std::vector<std::uint8_t>& bytes);

// Writes to a temporary sibling and renames over `path`.
void save_checkpoint(const std::string& path, const ControllerParams& params,
                     const OptimizerState& optimizer, const Digest& space_hash);
Checkpoint load_checkpoint(const std::string& path, const SearchSpace& space);
CheckpointInfo read_checkpoint_info(const std::string& path);

}  // namespace taml

#endif  // TAML_CHECKPOINT_HPP_
