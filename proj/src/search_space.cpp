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

#include "taml/search_space.hpp"

#include <algorithm>
#include <cstdint>
#include <set>

#include "taml/error.hpp"

namespace taml {
namespace {

void append_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void append_string(std::vector<std::uint8_t>& out, const std::string& s) {
  append_u64(out, s.size());
  out.insert(out.end(), s.begin(), s.end());
}

Digest canonical_hash(const std::vector<Dimension>& dims) {
  std::vector<std::uint8_t> bytes;
  append_u64(bytes, dims.size());
  for (const auto& dim : dims) {
    append_string(bytes, dim.name);
    append_u64(bytes, dim.options.size());
    for (const auto& option : dim.options) append_string(bytes, option);
  }
  return sha256(bytes);
}

// Table 1 rows 2-12, shared by the text and image presets.
std::vector<Dimension> table1_tail() {
  return {
      {"fine_tune_input_embedding_module", {"True", "False"}},
      {"num_hidden_layers", {"1", "2", "3", "5", "7"}},
      {"hidden_layers_size", {"8", "16", "32", "64", "128", "256"}},
      {"hidden_layers_activation", {"relu", "swish"}},
      {"hidden_layers_normalization", {"none", "batch norm", "layer norm"}},
      {"hidden_layers_dropout_rate",
       {"0.0", "0.01", "0.05", "0.1", "0.2", "0.3", "0.4", "0.5", "0.6"}},
      {"deep_tower_learning_rate",
       {"0.001", "0.003", "0.01", "0.03", "0.1", "0.3", "1.0", "3.0"}},
      {"deep_tower_regularization_weight",
       {"0.0", "0.00001", "0.0001", "0.001", "0.01", "0.1",
        "disable deep tower"}},
      {"wide_tower_learning_rate",
       {"0.001", "0.003", "0.01", "0.03", "0.1", "0.3", "1.0", "3.0"}},
      {"wide_tower_regularization_weight",
       {"0.0", "0.00001", "0.0001", "0.001", "0.01", "0.1",
        "disable wide tower"}},
      {"number_of_training_samples",
       {"1000", "3000", "10000", "30000", "100000", "300000", "1000000"}},
  };
}

}  // namespace

SearchSpace::SearchSpace(std::vector<Dimension> dimensions)
    : dimensions_(std::move(dimensions)) {
  if (dimensions_.empty()) {
    throw ConfigError("search space has no dimensions");
  }
  std::set<std::string> names;
  for (std::size_t d = 0; d < dimensions_.size(); ++d) {
    const auto& dim = dimensions_[d];
    if (dim.name.empty()) {
      throw ConfigError("dimension " + std::to_string(d) + " has an empty name");
    }
    if (!names.insert(dim.name).second) {
      throw ConfigError("duplicate dimension name '" + dim.name + "'");
    }
    if (dim.options.empty()) {
      throw ConfigError("dimension '" + dim.name + "' has no options");
    }
    std::set<std::string> labels;
    for (const auto& option : dim.options) {
      if (!labels.insert(option).second) {
        throw ConfigError("dimension '" + dim.name +
                          "' has duplicate option '" + option + "'");
      }
    }
  }
  hash_ = canonical_hash(dimensions_);
}

SearchSpace SearchSpace::from_options(
    const std::vector<std::vector<std::string>>& option_lists) {
  std::vector<Dimension> dims;
  for (std::size_t d = 0; d < option_lists.size(); ++d) {
    dims.push_back({"dim" + std::to_string(d), option_lists[d]});
  }
  return SearchSpace(std::move(dims));
}

SearchSpace SearchSpace::from_counts(const std::vector<int>& counts) {
  std::vector<std::vector<std::string>> lists;
  for (int count : counts) {
    std::vector<std::string> options;
    for (int i = 0; i < count; ++i) options.push_back(std::to_string(i));
    lists.push_back(std::move(options));
  }
  return from_options(lists);
}

std::vector<int> SearchSpace::option_counts() const {
  std::vector<int> counts;
  counts.reserve(dimensions_.size());
  for (const auto& dim : dimensions_) {
    counts.push_back(static_cast<int>(dim.options.size()));
  }
  return counts;
}

Cardinality cardinality(const SearchSpace& space) {
  Cardinality total = 1;
  for (int count : space.option_counts()) {
    const auto c = static_cast<Cardinality>(count);
    if (total > ~Cardinality{0} / c) {
      throw NumericError("search space cardinality exceeds 128 bits");
    }
    total *= c;
  }
  return total;
}

std::string to_string(Cardinality value) {
  if (value == 0) return "0";
  std::string digits;
  while (value > 0) {
    digits.push_back(static_cast<char>('0' + static_cast<int>(value % 10)));
    value /= 10;
  }
  std::reverse(digits.begin(), digits.end());
  return digits;
}

void validate_spec(const SearchSpace& space, const ModelSpec& spec) {
  if (static_cast<int>(spec.choices.size()) != space.num_dimensions()) {
    throw ConfigError("spec has " + std::to_string(spec.choices.size()) +
                      " choices but the space has " +
                      std::to_string(space.num_dimensions()) + " dimensions");
  }
  for (int d = 0; d < space.num_dimensions(); ++d) {
    const int index = spec.choices[d];
    if (index < 0 || index >= space.option_count(d)) {
      throw ConfigError("choice " + std::to_string(index) +
                        " out of range for dimension " + std::to_string(d) +
                        " ('" + space.dimensions()[d].name + "', " +
                        std::to_string(space.option_count(d)) + " options)");
    }
  }
}

bool is_valid_spec(const SearchSpace& space, const ModelSpec& spec) {
  if (static_cast<int>(spec.choices.size()) != space.num_dimensions()) {
    return false;
  }
  for (int d = 0; d < space.num_dimensions(); ++d) {
    if (spec.choices[d] < 0 || spec.choices[d] >= space.option_count(d)) {
      return false;
    }
  }
  return true;
}

ModelSpec sample_uniform(const SearchSpace& space, Rng& rng) {
  ModelSpec spec;
  spec.choices.reserve(space.num_dimensions());
  for (int count : space.option_counts()) {
    spec.choices.push_back(std::uniform_int_distribution<int>(0, count - 1)(rng));
  }
  return spec;
}

std::vector<std::pair<std::string, std::string>> spec_to_labels(
    const SearchSpace& space, const ModelSpec& spec) {
  validate_spec(space, spec);
  std::vector<std::pair<std::string, std::string>> labels;
  for (int d = 0; d < space.num_dimensions(); ++d) {
    const auto& dim = space.dimensions()[d];
    labels.emplace_back(dim.name, dim.options[spec.choices[d]]);
  }
  return labels;
}

SearchSpace table1_text_preset() {
  std::vector<Dimension> dims{
      {"input_embedding_module",
       {"Spanish-small", "Spanish-big", "English-small", "English-big",
        "English-wiki-small", "English-wiki-big", "English-news-small",
        "English-news-big"}}};
  auto tail = table1_tail();
  dims.insert(dims.end(), tail.begin(), tail.end());
  return SearchSpace(std::move(dims));
}

SearchSpace table1_image_preset() {
  std::vector<Dimension> dims{
      {"input_embedding_module",
       {"MobileNet v1", "Inception v2", "Inception v3", "Resnet v1.101",
        "Resnet v1.50"}}};
  auto tail = table1_tail();
  dims.insert(dims.end(), tail.begin(), tail.end());
  return SearchSpace(std::move(dims));
}

}  // namespace taml
