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

#ifndef TAML_SEARCH_SPACE_HPP_
#define TAML_SEARCH_SPACE_HPP_

#include <string>
#include <utility>
#include <vector>

#include "taml/hash.hpp"
#include "taml/seeding.hpp"

namespace taml {

struct Dimension {
  std::string name;
  std::vector<std::string> options;

  friend bool operator==(const Dimension&, const Dimension&) = default;
};

// An ordered list of named discrete dimensions. Immutable after construction;
// option labels are opaque to the engine.
class SearchSpace {
 public:
  // Validates and builds. Throws ConfigError naming the offending dimension.
  explicit SearchSpace(std::vector<Dimension> dimensions);

  // Unnamed dimensions become "dim0", "dim1", ...
  static SearchSpace from_options(
      const std::vector<std::vector<std::string>>& option_lists);

  // A space whose dimension d has counts[d] options labelled "0", "1", ...
  static SearchSpace from_counts(const std::vector<int>& counts);

  const std::vector<Dimension>& dimensions() const { return dimensions_; }
  int num_dimensions() const { return static_cast<int>(dimensions_.size()); }
  int option_count(int d) const {
    return static_cast<int>(dimensions_[d].options.size());
  }
  std::vector<int> option_counts() const;

  // SHA-256 over the length-prefixed canonical serialization of names and
  // options in declared order.
  const Digest& content_hash() const { return hash_; }

  friend bool operator==(const SearchSpace& a, const SearchSpace& b) {
    return a.hash_ == b.hash_ && a.dimensions_ == b.dimensions_;
  }

 private:
  std::vector<Dimension> dimensions_;
  Digest hash_;
};

// One option index per dimension.
struct ModelSpec {
  std::vector<int> choices;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
  friend auto operator<=>(const ModelSpec&, const ModelSpec&) = default;
};

using Cardinality = unsigned __int128;

// Exact product of option counts. Throws NumericError past 2^128.
Cardinality cardinality(const SearchSpace& space);
std::string to_string(Cardinality value);

// Throws ConfigError on length mismatch or an out-of-range index.
void validate_spec(const SearchSpace& space, const ModelSpec& spec);
bool is_valid_spec(const SearchSpace& space, const ModelSpec& spec);

ModelSpec sample_uniform(const SearchSpace& space, Rng& rng);

std::vector<std::pair<std::string, std::string>> spec_to_labels(
    const SearchSpace& space, const ModelSpec& spec);

// Visits every spec in lexicographic order (last dimension fastest).
template <typename F>
void for_each_spec(const SearchSpace& space, F&& visit) {
  const int dims = space.num_dimensions();
  ModelSpec spec{std::vector<int>(dims, 0)};
  while (true) {
    visit(static_cast<const ModelSpec&>(spec));
    int d = dims - 1;
    for (; d >= 0; --d) {
      if (++spec.choices[d] < space.option_count(d)) break;
      spec.choices[d] = 0;
    }
    if (d < 0) return;
  }
}

// Search space of the text-input child models: 12 dimensions with option
// counts 8,2,5,6,2,3,9,8,7,8,7,7.
SearchSpace table1_text_preset();
// Same space with the five ImageNet feature modules in dimension 0.
SearchSpace table1_image_preset();

}  // namespace taml

#endif  // TAML_SEARCH_SPACE_HPP_
