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

#include "drfl/datagen/dataset.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include "drfl/errors.hpp"
#include "drfl/numkernel/tensor_io.hpp"
#include "drfl/rng.hpp"

namespace drfl::datagen {

namespace io = numkernel::io;

void LabeledDataset::validate() const {
  if (features.rank() != 2 || features.shape()[0] != labels.size()) {
    throw ContractError("dataset: " + std::to_string(labels.size()) + " labels for features " +
                        numkernel::shape_string(features.shape()));
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      throw ContractError("dataset: label " + std::to_string(y) + " outside [0, " +
                          std::to_string(classes) + ")");
    }
  }
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> indices) const {
  const std::size_t d = feature_width();
  LabeledDataset out;
  out.classes = classes;
  out.features = Tensor({indices.size(), d});
  out.labels.reserve(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const std::size_t src = indices[r];
    if (src >= size()) throw ContractError("dataset subset index out of range");
    for (std::size_t c = 0; c < d; ++c) out.features[r * d + c] = features[src * d + c];
    out.labels.push_back(labels[src]);
  }
  return out;
}

std::vector<std::size_t> LabeledDataset::class_counts() const {
  std::vector<std::size_t> counts(classes, 0);
  for (int y : labels) ++counts[static_cast<std::size_t>(y)];
  return counts;
}

LabeledDataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  if (spec.classes < 2) throw ContractError("generate_synthetic: need at least two classes");
  if (spec.samples < spec.classes) {
    throw ContractError("generate_synthetic: fewer samples than classes");
  }
  if (spec.feature_width == 0) throw ContractError("generate_synthetic: zero feature width");
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t k = spec.classes, d = spec.feature_width, n = spec.samples;

  Tensor means({k, d});
  for (std::size_t c = 0; c < k; ++c) {
    double norm = 0.0;
    do {
      norm = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        means.at(c, j) = normal(rng);
        norm += means.at(c, j) * means.at(c, j);
      }
      norm = std::sqrt(norm);
    } while (norm < 1e-12);
    for (std::size_t j = 0; j < d; ++j) means.at(c, j) *= spec.radius / norm;
  }

  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % k);
  shuffle(labels.begin(), labels.end(), rng);

  LabeledDataset out;
  out.classes = k;
  out.features = Tensor({n, d});
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<std::size_t>(labels[i]);
    for (std::size_t j = 0; j < d; ++j) out.features.at(i, j) = means.at(c, j) + normal(rng);
  }
  out.labels = std::move(labels);
  return out;
}

void save_matrix_file(const std::string& path, const LabeledDataset& data) {
  data.validate();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  io::write_u64(os, data.size());
  io::write_u64(os, data.feature_width());
  io::write_u64(os, data.classes);
  for (double v : data.features.values()) io::write_f64(os, v);
  for (int y : data.labels) io::write_i32(os, y);
  if (!os) throw std::runtime_error("write failed: " + path);
}

LabeledDataset load_matrix_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  const std::uint64_t rows = io::read_u64(is);
  const std::uint64_t cols = io::read_u64(is);
  const std::uint64_t classes = io::read_u64(is);
  if (rows == 0 || cols == 0 || classes < 2 || rows * cols > (std::uint64_t{1} << 32)) {
    throw std::runtime_error(path + ": implausible matrix header");
  }
  LabeledDataset out;
  out.classes = classes;
  out.features = Tensor({rows, cols});
  for (double& v : out.features.values()) v = io::read_f64(is);
  out.labels.resize(rows);
  for (int& y : out.labels) y = io::read_i32(is);
  out.validate();
  return out;
}

}  // namespace drfl::datagen
