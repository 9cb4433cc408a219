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

#include "drfl/simworld/cost_model.hpp"

#include <cmath>
#include <string>

#include "drfl/errors.hpp"

namespace drfl::simworld {

double training_time(const DeviceProfile& profile, std::size_t epochs) {
  if (!(profile.compute > 0.0)) throw ContractError("training_time: compute must be positive");
  return static_cast<double>(epochs) * static_cast<double>(profile.shard_size) / profile.compute;
}

double comm_time(double model_bytes, double bandwidth) {
  if (!(bandwidth > 0.0)) throw ContractError("comm_time: bandwidth must be positive");
  return model_bytes / bandwidth;
}

CostModel::CostModel(std::vector<double> model_bytes, std::vector<double> compute_multiplier,
                     std::size_t epochs)
    : model_bytes_(std::move(model_bytes)),
      multiplier_(std::move(compute_multiplier)),
      epochs_(epochs) {
  if (model_bytes_.empty()) throw ContractError("cost model: need at least one depth");
  if (multiplier_.size() != model_bytes_.size()) {
    throw ContractError("cost model: one compute multiplier per depth required");
  }
  for (std::size_t m = 0; m < model_bytes_.size(); ++m) {
    if (!(model_bytes_[m] >= 0.0) || !(multiplier_[m] > 0.0)) {
      throw ContractError("cost model: sizes must be >= 0 and multipliers > 0");
    }
  }
}

std::vector<double> CostModel::param_fraction_multipliers(std::span<const std::size_t> params) {
  std::vector<double> out;
  if (params.empty()) return out;
  const auto full = static_cast<double>(params.back());
  for (std::size_t p : params) out.push_back(static_cast<double>(p) / full);
  return out;
}

std::vector<double> CostModel::unit_multipliers(std::size_t depth) {
  return std::vector<double>(depth, 1.0);
}

ActionCost CostModel::cost(const DeviceProfile& profile, std::size_t depth) const {
  if (depth < 1 || depth > model_bytes_.size()) {
    throw ContractError("cost: depth " + std::to_string(depth) + " out of range");
  }
  ActionCost c;
  c.t_train = training_time(profile, epochs_) * multiplier_[depth - 1];
  c.t_com = comm_time(model_bytes_[depth - 1], profile.bandwidth);
  c.e_train = profile.p_train * c.t_train;
  c.e_com = profile.p_com * c.t_com;
  return c;
}

double CostModel::cheapest_energy(const DeviceProfile& profile) const {
  double best = cost(profile, 1).energy();
  for (std::size_t m = 2; m <= depth(); ++m) best = std::min(best, cost(profile, m).energy());
  return best;
}

std::vector<bool> CostModel::feasible_actions(const DeviceProfile& profile,
                                              const DeviceState& state) const {
  std::vector<bool> mask(depth() + 1, false);
  for (std::size_t m = 1; m <= depth(); ++m) {
    mask[m - 1] = state.remaining_energy >= cost(profile, m).energy();
  }
  mask[depth()] = true;
  return mask;
}

std::vector<bool> feasible_actions(const DeviceProfile& profile, const DeviceState& state,
                                   std::span<const double> model_bytes, std::size_t epochs) {
  const CostModel model(std::vector<double>(model_bytes.begin(), model_bytes.end()),
                        CostModel::unit_multipliers(model_bytes.size()), epochs);
  return model.feasible_actions(profile, state);
}

DeviceState charge_round(const DeviceState& state, const ActionCost& cost,
                         double cheapest_energy) {
  const double spend = cost.energy();
  if (!(spend >= 0.0) || cost.t_train < 0.0 || cost.t_com < 0.0) {
    throw InvariantError("charge_round: negative cost component");
  }
  if (spend > state.remaining_energy) {
    throw InvariantError("charge_round: charging " + std::to_string(spend) + " J against " +
                         std::to_string(state.remaining_energy) + " J remaining");
  }
  DeviceState next = state;
  next.remaining_energy = state.remaining_energy - spend;
  next.train_time += cost.t_train;
  next.comm_time += cost.t_com;
  if (cost.t_train > 0.0 || cost.t_com > 0.0) ++next.rounds_participated;
  next.depleted = next.remaining_energy < cheapest_energy;
  return next;
}

DeviceState fresh_state(double battery_joules, double cheapest_energy) {
  DeviceState s;
  s.remaining_energy = battery_joules;
  s.depleted = battery_joules < cheapest_energy;
  return s;
}

}  // namespace drfl::simworld
