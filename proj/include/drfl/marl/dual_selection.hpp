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
#include <span>
#include <vector>

#include "drfl/numkernel/tensor.hpp"

namespace drfl::marl {

// Per-agent input: normalized data size, compute, remaining energy and round
// index, plus the previous round's action one-hot over M+1.
struct AgentObservation {
  double data_size = 0.0;
  double compute = 0.0;
  double energy = 0.0;
  double round = 0.0;
  std::size_t prev_action = 0;

  static constexpr std::size_t kScalarFeatures = 4;
  static std::size_t width(std::size_t action_count) { return kScalarFeatures + action_count; }
  // Throws ContractError when a feature leaves [0, 1] or prev_action >= A.
  void validate(std::size_t action_count) const;
  void write(std::span<double> out, std::size_t action_count) const;
};

numkernel::Tensor stack_observations(std::span<const AgentObservation> obs,
                                     std::size_t action_count);

struct AgentChoice {
  std::size_t device = 0;
  std::size_t action = 0;
  double q = 0.0;
};

// Up to K devices whose action is not `skip_action`, highest q first, ties
// to the lower device id. Result is in selection order.
std::vector<std::size_t> topk_select(std::span<const AgentChoice> choices, std::size_t k,
                                     std::size_t skip_action);

struct RewardWeights {
  double w1 = 1000.0;  // accuracy gain
  double w2 = 0.01;    // energy spent
  double w3 = 1.0;     // round wall time
};

// w1 (acc_t - acc_prev) - w2 (E_all_prev - E_all_t) - w3 T_all
double compute_reward(double acc_t, double acc_prev, double e_all_prev, double e_all_t,
                      double t_all_max, const RewardWeights& weights);

}  // namespace drfl::marl
