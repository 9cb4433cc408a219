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
#include <vector>

#include "drfl/datagen/dataset.hpp"

namespace drfl::datagen {

struct PartitionPlan {
  std::vector<std::vector<std::size_t>> device_indices;
  std::vector<std::size_t> validation_indices;
  double alpha = 0.0;
  double validation_fraction = 0.0;
};

// Removes round(v * N) uniformly chosen samples as the server validation
// split, then for every class draws p ~ Dirichlet(alpha * 1_devices) and
// sends each remaining sample of that class to a device drawn from p.
// Devices left empty steal the last sample of the currently largest shard,
// in ascending device order.
PartitionPlan dirichlet_partition(const LabeledDataset& data, std::size_t devices, double alpha,
                                  double validation_fraction, std::uint64_t seed);

// Shannon entropy (nats) of each device's label histogram.
std::vector<double> device_label_entropy(const LabeledDataset& data, const PartitionPlan& plan);
double mean_label_entropy(const LabeledDataset& data, const PartitionPlan& plan);

}  // namespace drfl::datagen
