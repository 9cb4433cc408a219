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

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace drfl::simworld {

using DeviceId = std::size_t;

enum class DeviceClass { kSmall = 0, kMedium = 1, kLarge = 2 };
inline constexpr std::size_t kDeviceClassCount = 3;

std::string_view to_string(DeviceClass c);
std::optional<DeviceClass> parse_device_class(std::string_view s);

struct DeviceProfile {
  DeviceId id = 0;
  DeviceClass cls = DeviceClass::kSmall;
  double compute = 1.0;    // C: samples per second
  double bandwidth = 1.0;  // V_net: bytes per second
  double p_train = 1.0;    // watts while training
  double p_com = 1.0;      // watts while transmitting
  double p_idle = 0.0;     // watts while waiting for the round to finish
  std::size_t shard_size = 0;  // L: local samples

  // Throws ContractError unless all rates and powers are positive.
  void validate() const;
};

struct DeviceState {
  double remaining_energy = 0.0;  // joules
  double train_time = 0.0;        // cumulative seconds
  double comm_time = 0.0;
  std::size_t rounds_participated = 0;
  bool depleted = false;
};

// Time and energy of one device's part in one round.
struct ActionCost {
  double t_train = 0.0;
  double t_com = 0.0;
  double e_train = 0.0;
  double e_com = 0.0;
  double e_idle = 0.0;

  double time() const { return t_train + t_com; }
  double energy() const { return e_train + e_com + e_idle; }
};

struct RoundCostEntry {
  DeviceId device = 0;
  ActionCost cost;
};

struct RoundCost {
  std::vector<RoundCostEntry> entries;
  double t_all = 0.0;         // max over entries of time()
  double total_energy = 0.0;  // sum over entries of energy()
};

// Fills t_all and total_energy from the entries.
RoundCost make_round_cost(std::vector<RoundCostEntry> entries);

}  // namespace drfl::simworld
