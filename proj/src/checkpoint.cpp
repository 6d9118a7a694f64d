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

#include "taml/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "taml/error.hpp"

namespace taml {
namespace {

constexpr std::uint32_t kFlagTaskConditioning = 1u;

class Writer {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    out_.insert(out_.end(), p, p + n);
  }
  template <typename T>
  void integer(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      out_.push_back(static_cast<std::uint8_t>(static_cast<std::uint64_t>(v) >> (8 * i)));
    }
  }
  void f64(double v) { integer(std::bit_cast<std::uint64_t>(v)); }
  void string(const std::string& s) {
    integer<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  std::vector<std::uint8_t>& data() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  Reader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

  const std::uint8_t* take(std::size_t n) {
    if (n > size_ - pos_) throw CorruptError("checkpoint is truncated");
    const std::uint8_t* p = data_ + pos_;
    pos_ += n;
    return p;
  }
  template <typename T>
  T integer() {
    const std::uint8_t* p = take(sizeof(T));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    }
    return static_cast<T>(v);
  }
  double f64() { return std::bit_cast<double>(integer<std::uint64_t>()); }
  std::string string() {
    const auto n = integer<std::uint32_t>();
    const auto* p = take(n);
    return std::string(reinterpret_cast<const char*>(p), n);
  }
  bool done() const { return pos_ == size_; }

 private:
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

template <typename Tensor>
void write_tensor(Writer& w, const std::string& name, const Tensor& t) {
  w.string(name);
  w.integer<std::uint64_t>(static_cast<std::uint64_t>(t.rows()));
  w.integer<std::uint64_t>(static_cast<std::uint64_t>(t.cols()));
  for (Eigen::Index i = 0; i < t.size(); ++i) w.f64(t.data()[i]);
}

template <typename Tensor>
void read_tensor(Reader& r, const std::string& name, Tensor& t) {
  const std::string found = r.string();
  if (found != name) {
    throw CorruptError("checkpoint tensor '" + found + "' where '" + name +
                       "' was expected");
  }
  const auto rows = r.integer<std::uint64_t>();
  const auto cols = r.integer<std::uint64_t>();
  if (rows != static_cast<std::uint64_t>(t.rows()) ||
      cols != static_cast<std::uint64_t>(t.cols())) {
    throw CorruptError("checkpoint tensor '" + name + "' has shape " +
                       std::to_string(rows) + "x" + std::to_string(cols));
  }
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = r.f64();
}

// Header fields up to (not including) the tensor list.
CheckpointInfo read_header(Reader& r) {
  CheckpointInfo info;
  if (std::memcmp(r.take(8), kCheckpointMagic, 8) != 0) {
    throw CorruptError("not a checkpoint file (bad magic)");
  }
  info.format_version = r.integer<std::uint32_t>();
  if (info.format_version != kCheckpointVersion) {
    throw CorruptError("unsupported checkpoint format version " +
                       std::to_string(info.format_version));
  }
  std::memcpy(info.space_hash.data(), r.take(32), 32);
  info.num_tasks = r.integer<std::uint64_t>();
  const auto dims = r.integer<std::uint64_t>();
  if (dims > 1'000'000) throw CorruptError("implausible dimension count");
  for (std::uint64_t d = 0; d < dims; ++d) {
    info.option_counts.push_back(static_cast<int>(r.integer<std::uint64_t>()));
  }
  info.config.embedding_size = static_cast<int>(r.integer<std::uint32_t>());
  info.config.hidden_size = static_cast<int>(r.integer<std::uint32_t>());
  info.config.num_layers = static_cast<int>(r.integer<std::uint32_t>());
  const auto flags = r.integer<std::uint32_t>();
  info.config.task_conditioning = (flags & kFlagTaskConditioning) != 0;
  info.config.init_range = r.f64();
  info.parameter_version = r.integer<std::uint64_t>();
  const auto optimizer = r.integer<std::uint32_t>();
  if (optimizer > 1) throw CorruptError("unknown optimizer id");
  info.optimizer = optimizer == 0 ? OptimizerKind::kAdam : OptimizerKind::kSgd;
  info.optimizer_step = r.integer<std::uint64_t>();
  info.num_tensors = r.integer<std::uint32_t>();
  return info;
}

// Splits off and verifies the trailing digest.
Reader verified_body(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 32 + 8) throw CorruptError("checkpoint is truncated");
  const std::size_t body = bytes.size() - 32;
  const Digest expected = sha256(std::span(bytes.data(), body));
  if (std::memcmp(expected.data(), bytes.data() + body, 32) != 0) {
    throw CorruptError("checkpoint digest mismatch (truncated or corrupt file)");
  }
  return Reader(bytes.data(), body);
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

std::string to_string(OptimizerKind kind) {
  return kind == OptimizerKind::kAdam ? "adam" : "sgd";
}

OptimizerKind optimizer_from_string(const std::string& name) {
  if (name == "adam") return OptimizerKind::kAdam;
  if (name == "sgd") return OptimizerKind::kSgd;
  throw ConfigError("unknown optimizer '" + name + "' (expected adam or sgd)");
}

std::vector<std::uint8_t> encode_checkpoint(const ControllerParams& params,
                                            const OptimizerState& optimizer,
                                            const Digest& space_hash) {
  Writer w;
  w.bytes(kCheckpointMagic, 8);
  w.integer<std::uint32_t>(kCheckpointVersion);
  w.bytes(space_hash.data(), space_hash.size());
  w.integer<std::uint64_t>(static_cast<std::uint64_t>(params.num_tasks()));
  w.integer<std::uint64_t>(static_cast<std::uint64_t>(params.num_dimensions()));
  for (int count : params.option_counts()) w.integer<std::uint64_t>(count);
  w.integer<std::uint32_t>(params.embedding_size());
  w.integer<std::uint32_t>(params.hidden_size());
  w.integer<std::uint32_t>(static_cast<std::uint32_t>(params.tensors.layers.size()));
  w.integer<std::uint32_t>(params.config.task_conditioning ? kFlagTaskConditioning : 0);
  w.f64(params.config.init_range);
  w.integer<std::uint64_t>(params.version);
  w.integer<std::uint32_t>(optimizer.kind == OptimizerKind::kAdam ? 0 : 1);
  w.integer<std::uint64_t>(optimizer.step);

  const bool adam = optimizer.kind == OptimizerKind::kAdam;
  if (adam && (!same_shapes(params.tensors, optimizer.first_moment) ||
               !same_shapes(params.tensors, optimizer.second_moment))) {
    throw ConfigError("optimizer state shapes do not match controller parameters");
  }
  std::uint32_t count = 0;
  visit_tensors([&](const std::string&, const auto&) { ++count; }, params.tensors);
  w.integer<std::uint32_t>(adam ? 3 * count : count);
  visit_tensors([&](const std::string& name, const auto& t) { write_tensor(w, name, t); },
                params.tensors);
  if (adam) {
    visit_tensors([&](const std::string& name,
                      const auto& t) { write_tensor(w, "adam_m/" + name, t); },
                  optimizer.first_moment);
    visit_tensors([&](const std::string& name,
                      const auto& t) { write_tensor(w, "adam_v/" + name, t); },
                  optimizer.second_moment);
  }
  auto& out = w.data();
  const Digest digest = sha256(out);
  out.insert(out.end(), digest.begin(), digest.end());
  return std::move(out);
}

CheckpointInfo decode_checkpoint_info(const std::vector<std::uint8_t>& bytes) {
  Reader r = verified_body(bytes);
  return read_header(r);
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes,
                             const SearchSpace& space) {
  Reader r = verified_body(bytes);
  const CheckpointInfo info = read_header(r);
  if (info.space_hash != space.content_hash()) {
    throw MismatchError("checkpoint was written for a different search space (hash " +
                        to_hex(info.space_hash) + ", expected " +
                        to_hex(space.content_hash()) + ")");
  }
  if (info.option_counts != space.option_counts()) {
    throw CorruptError("checkpoint option counts disagree with its space hash");
  }
  if (info.num_tasks < 1 || info.num_tasks > 1'000'000 ||
      info.config.embedding_size < 1 || info.config.hidden_size < 1 ||
      info.config.num_layers < 1) {
    throw CorruptError("checkpoint header has invalid sizes");
  }

  Checkpoint ckpt;
  ckpt.space_hash = info.space_hash;
  ControllerConfig shape = info.config;
  shape.init_range = 0.0;
  Rng unused(0);
  ckpt.params = init_params<double>(space, static_cast<int>(info.num_tasks), shape, unused);
  ckpt.params.config = info.config;
  ckpt.params.version = info.parameter_version;
  ckpt.optimizer = init_optimizer_state(ckpt.params, info.optimizer);
  ckpt.optimizer.step = info.optimizer_step;

  std::uint64_t expected = 0;
  visit_tensors([&](const std::string&, const auto&) { ++expected; },
                ckpt.params.tensors);
  if (info.optimizer == OptimizerKind::kAdam) expected *= 3;
  if (info.num_tensors != expected) {
    throw CorruptError("checkpoint has " + std::to_string(info.num_tensors) +
                       " tensors, expected " + std::to_string(expected));
  }
  visit_tensors([&](const std::string& name, auto& t) { read_tensor(r, name, t); },
                ckpt.params.tensors);
  if (info.optimizer == OptimizerKind::kAdam) {
    visit_tensors([&](const std::string& name,
                      auto& t) { read_tensor(r, "adam_m/" + name, t); },
                  ckpt.optimizer.first_moment);
    visit_tensors([&](const std::string& name,
                      auto& t) { read_tensor(r, "adam_v/" + name, t); },
                  ckpt.optimizer.second_moment);
  }
  if (!r.done()) throw CorruptError("trailing bytes after checkpoint tensors");
  return ckpt;
}

void save_checkpoint(const std::string& path, const ControllerParams& params,
                     const OptimizerState& optimizer, const Digest& space_hash) {
  const auto bytes = encode_checkpoint(params, optimizer, space_hash);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint '" + tmp + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing checkpoint '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place at '" + path + "': " + ec.message());
}

Checkpoint load_checkpoint(const std::string& path, const SearchSpace& space) {
  return decode_checkpoint(read_file(path), space);
}

CheckpointInfo read_checkpoint_info(const std::string& path) {
  return decode_checkpoint_info(read_file(path));
}

}  // namespace taml
