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

#include <doctest.h>

#include <map>

#include "oracles.hpp"
#include "taml/config.hpp"
#include "taml/error.hpp"
#include "taml/search_space.hpp"

using namespace taml;

TEST_CASE("table 1 text preset has the twelve dimensions") {
  const auto space = table1_text_preset();
  CHECK(space.option_counts() == std::vector<int>{8, 2, 5, 6, 2, 3, 9, 8, 7, 8, 7, 7});
  CHECK(to_string(cardinality(space)) == "568995840");
  CHECK(cardinality(space) == Cardinality{568995840});
}

TEST_CASE("image preset swaps the embedding modules") {
  const auto space = table1_image_preset();
  CHECK(space.option_count(0) == 5);
  // Text and image spaces together still fall short of 1.1B.
  CHECK(to_string(cardinality(space) + cardinality(table1_text_preset())) == "924618240");
}

TEST_CASE("degenerate and small spaces") {
  CHECK(cardinality(SearchSpace::from_counts({1})) == 1);
  CHECK(cardinality(SearchSpace::from_counts({4})) == 4);
  CHECK(cardinality(SearchSpace::from_counts({2, 3, 4})) == 24);
}

TEST_CASE("cardinality beyond 64 bits is exact") {
  std::vector<int> counts(20, 10);  // 10^20
  CHECK(to_string(cardinality(SearchSpace::from_counts(counts))) ==
        "100000000000000000000");
  std::vector<int> huge(40, 10);  // 10^40 > 2^128
  CHECK_THROWS_AS(cardinality(SearchSpace::from_counts(huge)), Error);
}

TEST_CASE("construction errors name the dimension") {
  CHECK_THROWS_AS(SearchSpace(std::vector<Dimension>{}), Error);
  try {
    SearchSpace(std::vector<Dimension>{{"lr", {"a"}}, {"lr", {"b"}}});
    FAIL("expected duplicate-name error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("lr") != std::string::npos);
    CHECK(e.kind() == ErrorKind::kConfig);
  }
  try {
    SearchSpace(std::vector<Dimension>{{"depth", {}}});
    FAIL("expected empty-options error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("depth") != std::string::npos);
  }
  CHECK_THROWS_AS(SearchSpace(std::vector<Dimension>{{"act", {"relu", "relu"}}}), Error);
}

TEST_CASE("validate_spec") {
  const auto space = SearchSpace::from_counts({2, 3});
  CHECK_NOTHROW(validate_spec(space, ModelSpec{{1, 2}}));
  try {
    validate_spec(space, ModelSpec{{1, 3}});
    FAIL("expected range error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("dimension 1") != std::string::npos);
  }
  CHECK_THROWS_AS(validate_spec(space, ModelSpec{{1}}), Error);
  CHECK_THROWS_AS(validate_spec(space, ModelSpec{{-1, 0}}), Error);
}

TEST_CASE("cardinality equals the number of valid specs by enumeration") {
  Rng rng(11);
  for (int trial = 0; trial < 25; ++trial) {
    const int dims = std::uniform_int_distribution<int>(1, 4)(rng);
    std::vector<int> counts;
    for (int d = 0; d < dims; ++d) counts.push_back(std::uniform_int_distribution<int>(1, 7)(rng));
    const auto space = SearchSpace::from_counts(counts);
    CHECK(static_cast<std::uint64_t>(cardinality(space)) == oracle::count_valid_specs(space));
    std::uint64_t visited = 0;
    for_each_spec(space, [&](const ModelSpec& s) {
      CHECK(is_valid_spec(space, s));
      ++visited;
    });
    CHECK(visited == static_cast<std::uint64_t>(cardinality(space)));
  }
}

TEST_CASE("sample_uniform") {
  SUBCASE("single-option space gives zeros") {
    Rng rng(1);
    CHECK(sample_uniform(SearchSpace::from_counts({1, 1, 1}), rng).choices ==
          std::vector<int>{0, 0, 0});
  }
  SUBCASE("deterministic per seed and always valid") {
    const auto space = table1_text_preset();
    Rng a(99), b(99);
    for (int i = 0; i < 200; ++i) {
      const auto s = sample_uniform(space, a);
      CHECK(s == sample_uniform(space, b));
      CHECK(is_valid_spec(space, s));
    }
  }
  SUBCASE("frequencies on a 4-option dimension") {
    const auto space = SearchSpace::from_counts({4});
    Rng rng(2024);
    std::vector<int> counts(4, 0);
    const int n = 100000;
    for (int i = 0; i < n; ++i) ++counts[sample_uniform(space, rng).choices[0]];
    for (int c : counts) CHECK(std::abs(c / double(n) - 0.25) <= 0.01);
  }
}

TEST_CASE("spec_to_labels") {
  const auto preset = table1_text_preset();
  const auto labels = spec_to_labels(preset, ModelSpec{std::vector<int>(12, 0)});
  CHECK(labels.front().first == "input_embedding_module");
  CHECK(labels.front().second == "Spanish-small");
  CHECK(labels.back().second == "1000");

  const auto space = SearchSpace::from_options({{"a", "b"}});
  CHECK(spec_to_labels(space, ModelSpec{{1}}) ==
        std::vector<std::pair<std::string, std::string>>{{"dim0", "b"}});
  CHECK_THROWS_AS(spec_to_labels(space, ModelSpec{{2}}), Error);
}

TEST_CASE("content hash is stable and sensitive") {
  const auto a = SearchSpace::from_options({{"x", "y"}, {"1", "2", "3"}});
  const auto b = SearchSpace::from_options({{"x", "y"}, {"1", "2", "3"}});
  CHECK(a.content_hash() == b.content_hash());
  CHECK(a.content_hash() != SearchSpace::from_options({{"x", "y"}, {"1", "2", "4"}}).content_hash());
  // Length prefixing separates ["ab"] from ["a","b"] style collisions.
  CHECK(SearchSpace({{"d", {"ab", "c"}}}).content_hash() !=
        SearchSpace({{"d", {"a", "bc"}}}).content_hash());
}

TEST_CASE("render then parse round-trips a space") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Dimension> dims;
    const int n = std::uniform_int_distribution<int>(1, 5)(rng);
    for (int d = 0; d < n; ++d) {
      Dimension dim{"dim " + std::to_string(d) + ": odd'name", {}};
      const int k = std::uniform_int_distribution<int>(1, 6)(rng);
      for (int o = 0; o < k; ++o) dim.options.push_back("opt-" + std::to_string(o) + " #x");
      dims.push_back(dim);
    }
    const SearchSpace space(dims);
    const SearchSpace back = parse_space(render_space(space), "render");
    CHECK(back == space);
  }
  const auto preset = table1_text_preset();
  CHECK(parse_space(render_space(preset), "render").content_hash() == preset.content_hash());
}
