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

#include "drfl/simworld/device.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "drfl/errors.hpp"

namespace drfl::simworld {

std::string_view to_string(DeviceClass c) {
  switch (c) {
    case DeviceClass::kSmall: return "small";
    case DeviceClass::kMedium: return "medium";
    case DeviceClass::kLarge: return "large";
  }
  return "?";
}

std::optional<DeviceClass> parse_device_class(std::string_view s) {
  if (s == "small") return DeviceClass::kSmall;
  if (s == "medium") return DeviceClass::kMedium;
  if (s == "large") return DeviceClass::kLarge;
  return std::nullopt;
}

void DeviceProfile::validate() const {
  auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  if (!positive(compute) || !positive(bandwidth) || !positive(p_train) || !positive(p_com)) {
    throw ContractError("device " + std::to_string(id) +
                        ": compute, bandwidth and powers must be positive");
  }
  if (!(p_idle >= 0.0) || !std::isfinite(p_idle)) {
    throw ContractError("device " + std::to_string(id) + ": idle power must be >= 0");
  }
}

RoundCost make_round_cost(std::vector<RoundCostEntry> entries) {
  RoundCost rc;
  rc.entries = std::move(entries);
  for (const auto& e : rc.entries) {
    rc.t_all = std::max(rc.t_all, e.cost.time());
    rc.total_energy += e.cost.energy();
  }
  return rc;
}

}  // namespace drfl::simworld
