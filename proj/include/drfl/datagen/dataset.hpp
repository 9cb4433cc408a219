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

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "drfl/numkernel/tensor.hpp"

namespace drfl::datagen {

using numkernel::Tensor;

struct LabeledDataset {
  Tensor features;          // [samples x feature_width]
  std::vector<int> labels;  // one per row, in [0, classes)
  std::size_t classes = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t feature_width() const { return features.rank() == 2 ? features.shape()[1] : 0; }

  // Throws ContractError if rows and labels disagree or a label is out of range.
  void validate() const;

  LabeledDataset subset(std::span<const std::size_t> indices) const;
  std::vector<std::size_t> class_counts() const;
};

struct SyntheticSpec {
  std::size_t classes = 10;
  std::size_t samples = 6000;
  std::size_t feature_width = 16;
  double radius = 3.0;
};

// Gaussian mixture: one mean per class drawn uniformly on the sphere of
// `radius`, unit-variance isotropic noise. Labels are balanced (sample i has
// label i mod K before a seeded shuffle).
LabeledDataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

// Flat binary matrix file:
//   u64 rows, u64 cols, u64 classes,
//   f64 features[rows * cols] (row-major), i32 labels[rows]
// all little-endian.
void save_matrix_file(const std::string& path, const LabeledDataset& data);
LabeledDataset load_matrix_file(const std::string& path);

}  // namespace drfl::datagen
