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

#include "drfl/simworld/device.hpp"

namespace drfl::simworld {

// epochs * L / C
double training_time(const DeviceProfile& profile, std::size_t epochs);

// S / V_net
double comm_time(double model_bytes, double bandwidth);

// Per-depth price list for one model layout. Actions 0..M-1 train depth
// 1..M; action M is skip.
class CostModel {
 public:
  // `model_bytes[m-1]` is the dispatched size of the depth-m sub-model;
  // `compute_multiplier[m-1]` scales the training time of depth m.
  CostModel(std::vector<double> model_bytes, std::vector<double> compute_multiplier,
            std::size_t epochs);

  // Multiplier = param_count(m) / param_count(M).
  static std::vector<double> param_fraction_multipliers(std::span<const std::size_t> params);
  static std::vector<double> unit_multipliers(std::size_t depth);

  std::size_t depth() const { return model_bytes_.size(); }
  std::size_t skip_action() const { return depth(); }
  std::size_t epochs() const { return epochs_; }
  std::span<const double> model_bytes() const { return model_bytes_; }
  std::span<const double> compute_multiplier() const { return multiplier_; }

  // Training plus transmission cost for depth m (1-based); no idle term.
  ActionCost cost(const DeviceProfile& profile, std::size_t depth) const;
  double cheapest_energy(const DeviceProfile& profile) const;

  std::vector<bool> feasible_actions(const DeviceProfile& profile, const DeviceState& state) const;

 private:
  std::vector<double> model_bytes_;
  std::vector<double> multiplier_;
  std::size_t epochs_;
};

// Mask over actions 0..M: depth m is allowed iff the battery covers
// P_train * T_tra(m) + P_com * T_com(m). Skip (index M) is always allowed.
// Uses unit training multipliers, i.e. T_tra = epochs * L / C.
std::vector<bool> feasible_actions(const DeviceProfile& profile, const DeviceState& state,
                                   std::span<const double> model_bytes, std::size_t epochs);

// Applies one round's charge. Throws InvariantError if the battery cannot
// cover it. `cheapest_energy` is the cost of the cheapest training action,
// used to recompute the depleted flag.
DeviceState charge_round(const DeviceState& state, const ActionCost& cost,
                         double cheapest_energy);

DeviceState fresh_state(double battery_joules, double cheapest_energy);

}  // namespace drfl::simworld
