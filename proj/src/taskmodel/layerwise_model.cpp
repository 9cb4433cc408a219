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

#include "drfl/taskmodel/layerwise_model.hpp"

#include <cmath>
#include <string>

#include "drfl/errors.hpp"
#include "drfl/numkernel/ops.hpp"

namespace drfl::taskmodel {

namespace nk = numkernel;

void ModelSpec::validate() const {
  if (depth == 0) throw ContractError("model: depth must be at least 1");
  if (input_width == 0 || block_width == 0 || bottleneck_width == 0) {
    throw ContractError("model: widths must be positive");
  }
  if (classes < 2) throw ContractError("model: need at least two classes");
}

LayerwiseModel::LayerwiseModel(const ModelSpec& spec) : spec_(spec) {
  spec_.validate();
  for (std::size_t b = 1; b <= spec_.depth; ++b) {
    const std::size_t in = b == 1 ? spec_.input_width : spec_.block_width;
    tensors_.emplace_back(nk::Shape{in, spec_.block_width});
    tensors_.emplace_back(nk::Shape{spec_.block_width});
  }
  for (std::size_t m = 1; m <= spec_.depth; ++m) {
    tensors_.emplace_back(nk::Shape{spec_.block_width, spec_.bottleneck_width});
    tensors_.emplace_back(nk::Shape{spec_.bottleneck_width});
    tensors_.emplace_back(nk::Shape{spec_.bottleneck_width, spec_.classes});
    tensors_.emplace_back(nk::Shape{spec_.classes});
  }
}

LayerwiseModel LayerwiseModel::initialize(const ModelSpec& spec, Rng& rng) {
  LayerwiseModel model(spec);
  // He-uniform weights for the ReLU layers, zero biases.
  for (Tensor& t : model.tensors_) {
    if (t.rank() != 2) continue;
    const double bound = std::sqrt(6.0 / static_cast<double>(t.shape()[0]));
    for (double& v : t.values()) v = bound * (2.0 * uniform01(rng) - 1.0);
  }
  return model;
}

std::size_t LayerwiseModel::block_index(std::size_t b) const {
  if (b < 1 || b > spec_.depth) throw ContractError("block index out of range");
  return kBlockTensors * (b - 1);
}

std::size_t LayerwiseModel::head_index(std::size_t m) const {
  if (m < 1 || m > spec_.depth) throw ContractError("head index out of range");
  return kBlockTensors * spec_.depth + kHeadTensors * (m - 1);
}

std::vector<std::size_t> LayerwiseModel::submodel_indices(std::size_t m) const {
  if (m < 1 || m > spec_.depth) {
    throw ContractError("sub-model depth " + std::to_string(m) + " outside [1, " +
                        std::to_string(spec_.depth) + "]");
  }
  std::vector<std::size_t> idx;
  for (std::size_t b = 1; b <= m; ++b) {
    for (std::size_t k = 0; k < kBlockTensors; ++k) idx.push_back(block_index(b) + k);
  }
  for (std::size_t k = 0; k < kHeadTensors; ++k) idx.push_back(head_index(m) + k);
  return idx;
}

std::size_t LayerwiseModel::param_count(std::size_t m) const {
  std::size_t n = 0;
  for (std::size_t i : submodel_indices(m)) n += tensors_[i].size();
  return n;
}

std::size_t LayerwiseModel::total_param_count() const {
  std::size_t n = 0;
  for (const Tensor& t : tensors_) n += t.size();
  return n;
}

SubModelView::SubModelView(std::shared_ptr<const LayerwiseModel> global, std::size_t depth)
    : global_(std::move(global)), depth_(depth) {
  if (!global_) throw ContractError("sub-model view of a null model");
  if (depth_ < 1 || depth_ > global_->depth()) {
    throw ContractError("sub-model depth " + std::to_string(depth_) + " outside [1, " +
                        std::to_string(global_->depth()) + "]");
  }
}

std::size_t SubModelView::tensor_count() const {
  return LayerwiseModel::kBlockTensors * depth_ + LayerwiseModel::kHeadTensors;
}

const Tensor& SubModelView::tensor(std::size_t k) const {
  const std::size_t nb = LayerwiseModel::kBlockTensors * depth_;
  if (k < nb) return global_->tensors()[k];
  return global_->tensors()[global_->head_index(depth_) + (k - nb)];
}

ParameterSet SubModelView::parameters() const {
  ParameterSet out;
  out.reserve(tensor_count());
  for (std::size_t k = 0; k < tensor_count(); ++k) out.push_back(tensor(k));
  return out;
}

SubModelView extract_submodel(std::shared_ptr<const LayerwiseModel> global, std::size_t depth) {
  return SubModelView(std::move(global), depth);
}

Var submodel_logits(Var features, std::span<const Var> params, std::size_t depth) {
  const std::size_t expected =
      LayerwiseModel::kBlockTensors * depth + LayerwiseModel::kHeadTensors;
  if (params.size() != expected) {
    throw ContractError("submodel_logits: expected " + std::to_string(expected) +
                        " tensors, got " + std::to_string(params.size()));
  }
  Var h = features;
  for (std::size_t b = 0; b < depth; ++b) {
    h = nk::relu(nk::dense(h, params[2 * b], params[2 * b + 1]));
  }
  const std::size_t o = 2 * depth;
  Var z = nk::relu(nk::dense(h, params[o], params[o + 1]));
  return nk::dense(z, params[o + 2], params[o + 3]);
}

Tensor predict_logits(const LayerwiseModel& model, std::size_t depth, const Tensor& features) {
  nk::Tape tape;
  std::vector<Var> vars;
  for (std::size_t i : model.submodel_indices(depth)) vars.push_back(tape.constant(model.tensors()[i]));
  return submodel_logits(tape.constant(features), vars, depth).value();
}

}  // namespace drfl::taskmodel
