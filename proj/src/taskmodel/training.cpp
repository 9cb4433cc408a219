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

#include "drfl/taskmodel/training.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include "drfl/errors.hpp"
#include "drfl/numkernel/ops.hpp"
#include "drfl/numkernel/optim.hpp"
#include "drfl/numkernel/tensor_io.hpp"
#include "drfl/rng.hpp"

namespace drfl::taskmodel {

namespace nk = numkernel;

GradientUpdate local_train(const SubModelView& view, const LabeledDataset& shard,
                           const LocalTrainConfig& config, std::uint64_t shuffle_seed,
                           DeviceId device) {
  if (shard.size() == 0) throw ContractError("local_train: empty shard");
  if (config.epochs == 0) throw ContractError("local_train: epochs must be >= 1");
  if (config.batch_size == 0) throw ContractError("local_train: batch size must be >= 1");
  if (shard.feature_width() != view.spec().input_width) {
    throw ContractError("local_train: shard feature width does not match the model");
  }
  const ParameterSet initial = view.parameters();
  ParameterSet params = initial;
  const std::size_t n = shard.size(), d = shard.feature_width();

  Rng rng(shuffle_seed);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t rows = std::min(config.batch_size, n - start);
      Tensor x({rows, d});
      std::vector<int> y(rows);
      for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t src = order[start + r];
        std::copy_n(shard.features.data() + src * d, d, x.data() + r * d);
        y[r] = shard.labels[src];
      }
      nk::Tape tape;
      std::vector<Var> vars;
      vars.reserve(params.size());
      for (const Tensor& p : params) vars.push_back(tape.parameter(p));
      Var loss = nk::softmax_cross_entropy(submodel_logits(tape.constant(std::move(x)), vars,
                                                           view.depth()),
                                           y);
      tape.backward(loss);
      ParameterSet grads;
      grads.reserve(vars.size());
      for (const Var& v : vars) grads.push_back(v.grad());
      nk::sgd_step(params, grads, config.lr);
    }
  }

  GradientUpdate update;
  update.device = device;
  update.depth = view.depth();
  update.sample_count = n;
  update.deltas = initial;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto dv = update.deltas[k].values();
    auto pv = params[k].values();
    for (std::size_t j = 0; j < dv.size(); ++j) dv[j] -= pv[j];
  }
  return update;
}

LayerwiseModel aggregate_layerwise(const LayerwiseModel& global,
                                   std::span<const GradientUpdate> updates) {
  const std::size_t depth = global.depth();
  std::vector<const GradientUpdate*> ordered;
  ordered.reserve(updates.size());
  for (const GradientUpdate& u : updates) {
    if (u.depth < 1 || u.depth > depth) {
      throw ContractError("aggregate_layerwise: update depth " + std::to_string(u.depth) +
                          " outside [1, " + std::to_string(depth) + "]");
    }
    if (u.sample_count == 0) throw ContractError("aggregate_layerwise: update with L_n = 0");
    const auto idx = global.submodel_indices(u.depth);
    if (u.deltas.size() != idx.size()) {
      throw ContractError("aggregate_layerwise: update from device " + std::to_string(u.device) +
                          " has " + std::to_string(u.deltas.size()) + " tensors, expected " +
                          std::to_string(idx.size()));
    }
    for (std::size_t k = 0; k < idx.size(); ++k) {
      nk::require_same_shape(global.tensors()[idx[k]], u.deltas[k], "aggregate_layerwise");
    }
    ordered.push_back(&u);
  }
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const GradientUpdate* a, const GradientUpdate* b) {
                     return a->device < b->device;
                   });

  LayerwiseModel next = global;
  // Applies sum_n (L_n / sum L) * delta_n of the contributors to the tensor
  // at global index `gi`; `local` maps an update to its view-local index.
  auto apply = [&](std::size_t gi, auto&& contributes, auto&& local) {
    double total = 0.0;
    for (const GradientUpdate* u : ordered) {
      if (contributes(*u)) total += static_cast<double>(u->sample_count);
    }
    if (total == 0.0) return;
    Tensor step(global.tensors()[gi].shape(), 0.0);
    for (const GradientUpdate* u : ordered) {
      if (!contributes(*u)) continue;
      const double w = static_cast<double>(u->sample_count) / total;
      auto dv = u->deltas[local(*u)].values();
      for (std::size_t j = 0; j < dv.size(); ++j) step[j] += w * dv[j];
    }
    auto pv = next.tensors()[gi].values();
    for (std::size_t j = 0; j < pv.size(); ++j) pv[j] -= step[j];
  };

  for (std::size_t b = 1; b <= depth; ++b) {
    for (std::size_t k = 0; k < LayerwiseModel::kBlockTensors; ++k) {
      apply(
          global.block_index(b) + k, [b](const GradientUpdate& u) { return u.depth >= b; },
          [b, k](const GradientUpdate&) { return LayerwiseModel::kBlockTensors * (b - 1) + k; });
    }
  }
  for (std::size_t m = 1; m <= depth; ++m) {
    for (std::size_t k = 0; k < LayerwiseModel::kHeadTensors; ++k) {
      apply(
          global.head_index(m) + k, [m](const GradientUpdate& u) { return u.depth == m; },
          [m, k](const GradientUpdate&) { return LayerwiseModel::kBlockTensors * m + k; });
    }
  }
  return next;
}

double evaluate(const LayerwiseModel& model, std::size_t depth, const LabeledDataset& data) {
  if (data.size() == 0) throw ContractError("evaluate: empty dataset");
  const Tensor logits = predict_logits(model, depth, data.features);
  const std::size_t k = logits.cols();
  std::size_t correct = 0;
  for (std::size_t r = 0; r < data.size(); ++r) {
    const double* row = logits.data() + r * k;
    const auto best = static_cast<std::size_t>(std::max_element(row, row + k) - row);
    if (best == static_cast<std::size_t>(data.labels[r])) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

double evaluate(const SubModelView& view, const LabeledDataset& data) {
  return evaluate(view.global(), view.depth(), data);
}

namespace {
constexpr std::string_view kModelMagic = "DRFLMDL1";
constexpr std::uint32_t kModelVersion = 1;
}  // namespace

void save_checkpoint(const std::string& path, const LayerwiseModel& model) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  const ModelSpec& s = model.spec();
  nk::io::write_magic(os, kModelMagic);
  nk::io::write_u32(os, kModelVersion);
  for (std::size_t v : {s.depth, s.input_width, s.block_width, s.bottleneck_width, s.classes}) {
    nk::io::write_u32(os, static_cast<std::uint32_t>(v));
  }
  nk::io::write_tensors(os, model.tensors());
  if (!os) throw std::runtime_error("write failed: " + path);
}

LayerwiseModel load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  nk::io::expect_magic(is, kModelMagic);
  const std::uint32_t version = nk::io::read_u32(is);
  if (version != kModelVersion) {
    throw std::runtime_error(path + ": unsupported checkpoint version " + std::to_string(version));
  }
  ModelSpec s;
  s.depth = nk::io::read_u32(is);
  s.input_width = nk::io::read_u32(is);
  s.block_width = nk::io::read_u32(is);
  s.bottleneck_width = nk::io::read_u32(is);
  s.classes = nk::io::read_u32(is);
  LayerwiseModel model(s);
  ParameterSet tensors = nk::io::read_tensors(is, model.tensors().size());
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    nk::require_same_shape(model.tensors()[i], tensors[i], "load_checkpoint");
  }
  model.tensors() = std::move(tensors);
  return model;
}

}  // namespace drfl::taskmodel
