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

#include "drfl/datagen/dataset.hpp"
#include "drfl/taskmodel/layerwise_model.hpp"

namespace drfl::taskmodel {

using datagen::LabeledDataset;

using DeviceId = std::size_t;

// Weight difference (initial - final) for the tensors of a depth-m view.
struct GradientUpdate {
  DeviceId device = 0;
  std::size_t depth = 0;
  ParameterSet deltas;  // view order: blocks 1..depth, head depth
  std::size_t sample_count = 0;
};

struct LocalTrainConfig {
  std::size_t epochs = 5;
  std::size_t batch_size = 32;
  double lr = 0.05;
};

// Mini-batch SGD on softmax cross-entropy starting from the view's
// parameters. Each epoch visits the shard in a fresh order drawn from
// `shuffle_seed`. The global snapshot is never written.
GradientUpdate local_train(const SubModelView& view, const LabeledDataset& shard,
                           const LocalTrainConfig& config, std::uint64_t shuffle_seed,
                           DeviceId device = 0);

// Layer-aligned weighted averaging. Backbone block b moves by the
// sample-weighted mean of the deltas of every update with depth >= b; head m
// by the mean over updates with depth exactly m. Tensors nobody trained keep
// their previous values. Updates are reduced in ascending device order.
LayerwiseModel aggregate_layerwise(const LayerwiseModel& global,
                                   std::span<const GradientUpdate> updates);

// Fraction of argmax-correct predictions of the depth-m sub-model; logit ties
// go to the lowest class index.
double evaluate(const LayerwiseModel& model, std::size_t depth, const LabeledDataset& data);
double evaluate(const SubModelView& view, const LabeledDataset& data);

// Binary checkpoint: "DRFLMDL1", u32 version, u32 depth, u32 input width,
// u32 block width, u32 bottleneck width, u32 classes, then every tensor in
// declaration order (see numkernel::io::write_tensor).
void save_checkpoint(const std::string& path, const LayerwiseModel& model);
LayerwiseModel load_checkpoint(const std::string& path);

}  // namespace drfl::taskmodel
