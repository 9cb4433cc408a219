/*
 * Copyright 2026 The drfl Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "drfl/datagen/dataset.hpp"
#include "drfl/datagen/partition.hpp"
#include "drfl/errors.hpp"
#include "drfl/rng.hpp"

using namespace drfl;
using namespace drfl::datagen;

TEST_CASE("synthetic data is balanced to within one sample per class") {
  const auto d = generate_synthetic({7, 1000, 5, 3.0}, 11);
  d.validate();
  CHECK(d.size() == 1000);
  CHECK(d.feature_width() == 5);
  for (std::size_t c : d.class_counts()) {
    CHECK(c >= 142);
    CHECK(c <= 143);
  }
}

TEST_CASE("synthetic data depends only on the seed") {
  const SyntheticSpec s{3, 200, 4, 2.0};
  CHECK(generate_synthetic(s, 5).features == generate_synthetic(s, 5).features);
  CHECK_FALSE(generate_synthetic(s, 5).features == generate_synthetic(s, 6).features);
}

TEST_CASE("dataset validation rejects bad labels") {
  auto d = generate_synthetic({3, 30, 2, 1.0}, 1);
  d.labels[0] = 3;
  CHECK_THROWS_AS(d.validate(), ContractError);
}

TEST_CASE("matrix files round-trip") {
  const auto d = generate_synthetic({3, 30, 2, 1.0}, 1);
  const auto path = std::filesystem::temp_directory_path() / "drfl_matrix_test.bin";
  save_matrix_file(path.string(), d);
  const auto back = load_matrix_file(path.string());
  CHECK(back.features == d.features);
  CHECK(back.labels == d.labels);
  CHECK(back.classes == 3);
  std::filesystem::remove(path);
  CHECK_THROWS(load_matrix_file(path.string()));
}

TEST_CASE("partition covers every sample exactly once") {
  const auto d = generate_synthetic({10, 10000, 4, 3.0}, 3);
  const auto plan = dirichlet_partition(d, 40, 0.1, 0.04, 7);
  CHECK(plan.validation_indices.size() == 400);
  std::vector<int> seen(d.size(), 0);
  for (std::size_t i : plan.validation_indices) ++seen[i];
  for (const auto& dev : plan.device_indices) {
    CHECK_FALSE(dev.empty());
    for (std::size_t i : dev) ++seen[i];
  }
  CHECK(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
}

TEST_CASE("partition rejects invalid arguments") {
  const auto d = generate_synthetic({3, 30, 2, 1.0}, 1);
  CHECK_THROWS_AS(dirichlet_partition(d, 3, -1.0, 0.1, 1), ContractError);
  CHECK_THROWS_AS(dirichlet_partition(d, 0, 1.0, 0.1, 1), ContractError);
  CHECK_THROWS_AS(dirichlet_partition(d, 3, 1.0, 1.0, 1), ContractError);
}

TEST_CASE("huge alpha approaches the global label distribution") {
  const auto d = generate_synthetic({10, 20000, 2, 3.0}, 4);
  const auto plan = dirichlet_partition(d, 5, 1e6, 0.0, 8);
  for (const auto& dev : plan.device_indices) {
    std::vector<double> hist(10, 0.0);
    for (std::size_t i : dev) hist[d.labels[i]] += 1.0;
    for (double h : hist) CHECK(std::abs(h / dev.size() - 0.1) < 0.01);
  }
}

TEST_CASE("label entropy grows with alpha") {
  const auto d = generate_synthetic({10, 6000, 2, 3.0}, 5);
  const double lo = mean_label_entropy(d, dirichlet_partition(d, 20, 0.1, 0.0, 1));
  const double mid = mean_label_entropy(d, dirichlet_partition(d, 20, 1.0, 0.0, 1));
  const double hi = mean_label_entropy(d, dirichlet_partition(d, 20, 1e6, 0.0, 1));
  CHECK(lo < mid);
  CHECK(mid < hi);
  CHECK(hi <= std::log(10.0) + 1e-12);
}
