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
#include <memory>
#include <vector>

#include "drfl/numkernel/tape.hpp"
#include "drfl/numkernel/tensor.hpp"
#include "drfl/rng.hpp"

namespace drfl::taskmodel {

using numkernel::ParameterSet;
using numkernel::Tensor;
using numkernel::Var;

struct ModelSpec {
  std::size_t depth = 4;  // M: number of backbone blocks and exit heads
  std::size_t input_width = 16;
  std::size_t block_width = 64;
  std::size_t bottleneck_width = 32;
  std::size_t classes = 10;

  void validate() const;
  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

// Dense backbone of M blocks (linear + ReLU). Exit head m sits on block m's
// output: bottleneck linear + ReLU, then a classifier linear.
//
// Tensor declaration order (also the checkpoint order):
//   block 1 W, block 1 b, ..., block M W, block M b,
//   head 1 bottleneck W, b, classifier W, b, ..., head M (same four).
class LayerwiseModel {
 public:
  static constexpr std::size_t kBlockTensors = 2;
  static constexpr std::size_t kHeadTensors = 4;

  explicit LayerwiseModel(const ModelSpec& spec);  // all zeros
  static LayerwiseModel initialize(const ModelSpec& spec, Rng& rng);

  const ModelSpec& spec() const { return spec_; }
  std::size_t depth() const { return spec_.depth; }

  const ParameterSet& tensors() const { return tensors_; }
  ParameterSet& tensors() { return tensors_; }

  // Indices into tensors() for block b / head m (both 1-based).
  std::size_t block_index(std::size_t b) const;
  std::size_t head_index(std::size_t m) const;
  // Tensors making up the depth-m sub-model: blocks 1..m then head m.
  std::vector<std::size_t> submodel_indices(std::size_t m) const;

  std::size_t param_count(std::size_t m) const;
  std::size_t total_param_count() const;

  friend bool operator==(const LayerwiseModel&, const LayerwiseModel&) = default;

 private:
  ModelSpec spec_;
  ParameterSet tensors_;
};

// Depth-m slice of an immutable round snapshot. Copying a view is cheap; the
// parameters are shared with the snapshot.
class SubModelView {
 public:
  SubModelView(std::shared_ptr<const LayerwiseModel> global, std::size_t depth);

  std::size_t depth() const { return depth_; }
  const LayerwiseModel& global() const { return *global_; }
  const ModelSpec& spec() const { return global_->spec(); }

  std::vector<std::size_t> tensor_indices() const { return global_->submodel_indices(depth_); }
  const Tensor& tensor(std::size_t k) const;  // k-th tensor of the view
  std::size_t tensor_count() const;
  ParameterSet parameters() const;  // copies
  std::size_t param_count() const { return global_->param_count(depth_); }
  // Serialized size, 8 bytes per value.
  std::size_t byte_size() const { return 8 * param_count(); }

 private:
  std::shared_ptr<const LayerwiseModel> global_;
  std::size_t depth_;
};

SubModelView extract_submodel(std::shared_ptr<const LayerwiseModel> global, std::size_t depth);

// Forward pass of a depth-m sub-model on a tape. `params` are the view's
// tensors in view order (blocks 1..m, head m).
Var submodel_logits(Var features, std::span<const Var> params, std::size_t depth);

// Tape-free inference with the same arithmetic as submodel_logits.
Tensor predict_logits(const LayerwiseModel& model, std::size_t depth, const Tensor& features);

}  // namespace drfl::taskmodel
