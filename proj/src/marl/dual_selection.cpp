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

#include "drfl/marl/dual_selection.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "drfl/errors.hpp"

namespace drfl::marl {

namespace {

void require_unit(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw ContractError(std::string("observation: ") + name + " must be in [0, 1], got " +
                        std::to_string(v));
  }
}

}  // namespace

void AgentObservation::validate(std::size_t action_count) const {
  require_unit(data_size, "data_size");
  require_unit(compute, "compute");
  require_unit(energy, "energy");
  require_unit(round, "round");
  if (prev_action >= action_count) throw ContractError("observation: previous action out of range");
}

void AgentObservation::write(std::span<double> out, std::size_t action_count) const {
  validate(action_count);
  if (out.size() != width(action_count)) throw ContractError("observation: output width mismatch");
  std::fill(out.begin(), out.end(), 0.0);
  out[0] = data_size;
  out[1] = compute;
  out[2] = energy;
  out[3] = round;
  out[kScalarFeatures + prev_action] = 1.0;
}

numkernel::Tensor stack_observations(std::span<const AgentObservation> obs,
                                     std::size_t action_count) {
  const std::size_t w = AgentObservation::width(action_count);
  numkernel::Tensor out({obs.size(), w}, 0.0);
  for (std::size_t i = 0; i < obs.size(); ++i) {
    obs[i].write(std::span<double>(out.data() + i * w, w), action_count);
  }
  return out;
}

std::vector<std::size_t> topk_select(std::span<const AgentChoice> choices, std::size_t k,
                                     std::size_t skip_action) {
  std::vector<std::size_t> ids;
  for (const AgentChoice& c : choices) ids.push_back(c.device);
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    throw ContractError("topk_select: duplicate device");
  }
  std::vector<AgentChoice> pool;
  for (const AgentChoice& c : choices) {
    if (!std::isfinite(c.q)) throw ContractError("topk_select: non-finite q value");
    if (c.action != skip_action) pool.push_back(c);
  }
  std::sort(pool.begin(), pool.end(), [](const AgentChoice& a, const AgentChoice& b) {
    if (a.q != b.q) return a.q > b.q;
    return a.device < b.device;
  });
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < std::min(k, pool.size()); ++i) out.push_back(pool[i].device);
  return out;
}

double compute_reward(double acc_t, double acc_prev, double e_all_prev, double e_all_t,
                      double t_all_max, const RewardWeights& weights) {
  if (!std::isfinite(acc_t) || !std::isfinite(acc_prev) || !std::isfinite(e_all_prev) ||
      !std::isfinite(e_all_t) || !std::isfinite(t_all_max) || t_all_max < 0.0) {
    throw ContractError("compute_reward: inputs must be finite and time non-negative");
  }
  return weights.w1 * (acc_t - acc_prev) - weights.w2 * (e_all_prev - e_all_t) -
         weights.w3 * t_all_max;
}

}  // namespace drfl::marl
