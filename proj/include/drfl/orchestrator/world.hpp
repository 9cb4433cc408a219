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

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "drfl/datagen/dataset.hpp"
#include "drfl/orchestrator/config.hpp"
#include "drfl/rng.hpp"
#include "drfl/simworld/cost_model.hpp"

namespace drfl::orchestrator {

using simworld::DeviceProfile;
using simworld::DeviceState;

// Neumaier compensated summation; keeps joule totals of long runs exact to
// a few ulps.
class EnergySum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    comp_ += std::abs(sum_) >= std::abs(v) ? (sum_ - t) + v : (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0, comp_ = 0.0;
};

// Device population, batteries and data for one experiment. Device ids are
// assigned class by class: small first, then medium, then large.
struct World {
  std::vector<DeviceProfile> profiles;
  std::vector<DeviceState> states;
  std::vector<datagen::LabeledDataset> shards;
  datagen::LabeledDataset validation;
  simworld::CostModel costs{{1.0}, {1.0}, 1};
  std::vector<double> cheapest;  // per device
  double battery = 0.0;
  std::size_t max_shard = 0;
  double max_compute = 0.0;

  std::size_t size() const { return profiles.size(); }
  double e_all() const;
  bool all_depleted() const;
  std::vector<bool> mask(std::size_t device) const;
  // Recharges every battery and clears the cumulative counters.
  void reset_batteries();
};

// Loads or synthesizes the dataset, partitions it and builds profiles from
// the per-class settings. `param_counts[m-1]` is the size of the depth-m
// sub-model. Uses only the "data" stream of `seeds`.
World build_world(const ExperimentConfig& config, const SeedTree& seeds,
                  std::span<const std::size_t> param_counts);

}  // namespace drfl::orchestrator
