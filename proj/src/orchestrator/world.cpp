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

#include "drfl/orchestrator/world.hpp"

#include <algorithm>
#include <string>

#include "drfl/datagen/partition.hpp"
#include "drfl/errors.hpp"

namespace drfl::orchestrator {

double World::e_all() const {
  EnergySum total;
  for (const DeviceState& s : states) total.add(s.remaining_energy);
  return total.value();
}

bool World::all_depleted() const {
  return std::all_of(states.begin(), states.end(), [](const DeviceState& s) { return s.depleted; });
}

std::vector<bool> World::mask(std::size_t device) const {
  return costs.feasible_actions(profiles.at(device), states.at(device));
}

void World::reset_batteries() {
  for (std::size_t i = 0; i < states.size(); ++i) states[i] = simworld::fresh_state(battery, cheapest[i]);
}

World build_world(const ExperimentConfig& config, const SeedTree& seeds,
                  std::span<const std::size_t> param_counts) {
  config.validate();
  if (param_counts.size() != config.model.depth) {
    throw ContractError("build_world: one parameter count per depth required");
  }
  datagen::LabeledDataset data;
  if (!config.data.import_path.empty()) {
    data = datagen::load_matrix_file(config.data.import_path);
    if (data.size() < config.devices.total() + 1) {
      throw ConfigError("data.import_path", "dataset has fewer samples than devices");
    }
    if (data.feature_width() != config.data.feature_width) {
      throw ConfigError("data.feature_width", "does not match the imported dataset (" +
                                                  std::to_string(data.feature_width()) + ")");
    }
    if (data.classes != config.data.classes) {
      throw ConfigError("data.classes", "does not match the imported dataset (" +
                                            std::to_string(data.classes) + ")");
    }
  } else {
    datagen::SyntheticSpec spec;
    spec.classes = config.data.classes;
    spec.samples = config.data.samples;
    spec.feature_width = config.data.feature_width;
    spec.radius = config.data.radius;
    data = datagen::generate_synthetic(spec, seeds.derive("data", 0));
  }
  const std::size_t n = config.devices.total();
  const datagen::PartitionPlan plan = datagen::dirichlet_partition(
      data, n, config.data.alpha, config.data.validation_fraction, seeds.derive("data", 1));

  World w;
  w.battery = config.devices.battery_j;
  w.validation = data.subset(plan.validation_indices);
  std::vector<double> bytes, multipliers;
  for (std::size_t p : param_counts) bytes.push_back(8.0 * static_cast<double>(p));
  multipliers = config.devices.depth_cost == DepthCost::kParamFraction
                    ? simworld::CostModel::param_fraction_multipliers(param_counts)
                    : simworld::CostModel::unit_multipliers(param_counts.size());
  w.costs = simworld::CostModel(bytes, multipliers, config.run.train.epochs);

  std::size_t id = 0;
  for (std::size_t c = 0; c < kDeviceClassCount; ++c) {
    for (std::size_t k = 0; k < config.devices.counts[c]; ++k, ++id) {
      const ClassProfile& cp = config.devices.classes[c];
      DeviceProfile p;
      p.id = id;
      p.cls = static_cast<DeviceClass>(c);
      p.compute = cp.compute;
      p.bandwidth = cp.bandwidth;
      p.p_train = cp.p_train;
      p.p_com = cp.p_com;
      p.p_idle = config.devices.idle_energy ? cp.p_idle : 0.0;
      p.shard_size = plan.device_indices[id].size();
      p.validate();
      w.profiles.push_back(p);
      w.shards.push_back(data.subset(plan.device_indices[id]));
      w.max_shard = std::max(w.max_shard, p.shard_size);
      w.max_compute = std::max(w.max_compute, p.compute);
    }
  }
  for (const DeviceProfile& p : w.profiles) w.cheapest.push_back(w.costs.cheapest_energy(p));
  w.states.resize(n);
  w.reset_batteries();
  return w;
}

}  // namespace drfl::orchestrator
