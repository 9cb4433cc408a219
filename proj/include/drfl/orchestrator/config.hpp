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
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "drfl/marl/dual_selection.hpp"
#include "drfl/marl/qmix_learner.hpp"
#include "drfl/simworld/device.hpp"
#include "drfl/taskmodel/training.hpp"

namespace drfl::orchestrator {

using simworld::DeviceClass;
using simworld::kDeviceClassCount;

enum class SchedulerKind { kDrfl, kGreedy, kRandom, kStatic };
std::string_view to_string(SchedulerKind kind);
std::optional<SchedulerKind> parse_scheduler(std::string_view s);

// How training time scales with the dispatched depth.
enum class DepthCost { kParamFraction, kUnit };
std::string_view to_string(DepthCost c);
std::optional<DepthCost> parse_depth_cost(std::string_view s);

struct ClassProfile {
  double compute = 1.0;    // samples per second
  double bandwidth = 1.0;  // bytes per second
  double p_train = 1.0;    // watts
  double p_com = 1.0;
  double p_idle = 0.0;
};

struct DevicesConfig {
  double battery_j = 7560.0;
  std::array<std::size_t, kDeviceClassCount> counts{20, 0, 20};  // small, medium, large
  std::array<ClassProfile, kDeviceClassCount> classes{{
      {2.0, 2.0e5, 10.0, 2.0, 0.5},
      {4.0, 3.0e5, 15.0, 3.0, 0.75},
      {8.0, 4.0e5, 20.0, 4.0, 1.0},
  }};
  bool idle_energy = false;
  DepthCost depth_cost = DepthCost::kParamFraction;

  std::size_t total() const { return counts[0] + counts[1] + counts[2]; }
};

struct ModelConfig {
  std::size_t depth = 4;
  std::size_t block_width = 64;
  std::size_t bottleneck_width = 32;
};

struct DataConfig {
  std::size_t classes = 10;
  std::size_t samples = 6000;
  std::size_t feature_width = 16;
  double radius = 3.0;
  double alpha = 0.1;
  double validation_fraction = 0.04;
  std::string import_path;  // matrix file; empty = synthetic
};

struct SchedulerConfig {
  SchedulerKind kind = SchedulerKind::kDrfl;
  double participation = 0.1;
  std::array<std::size_t, kDeviceClassCount> static_depths{1, 2, 4};
};

struct MarlConfig {
  marl::LearnerConfig learner;
  std::size_t warmup_episodes = 50;
  std::size_t episodes = 200;
  marl::RewardWeights reward;
  // Multiplies rewards before they enter replay; reports stay unscaled.
  double reward_scale = 1.0;
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::size_t max_rounds = 40;
  std::optional<double> energy_budget_j;  // total joules; empty = unlimited
  taskmodel::LocalTrainConfig train;
  std::size_t patience = 0;  // 0 disables early stopping
};

struct ExperimentConfig {
  DevicesConfig devices;
  ModelConfig model;
  DataConfig data;
  SchedulerConfig scheduler;
  MarlConfig marl;
  RunConfig run;

  // Throws ConfigError naming the first offending dotted key.
  void validate() const;
  // Number of participants per round: max(1, ceil(participation * N)).
  std::size_t participants_per_round() const;
  taskmodel::ModelSpec model_spec(std::size_t input_width, std::size_t classes) const;
};

}  // namespace drfl::orchestrator
