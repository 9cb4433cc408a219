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
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "drfl/marl/qmix_learner.hpp"
#include "drfl/orchestrator/config.hpp"
#include "drfl/orchestrator/world.hpp"
#include "drfl/taskmodel/layerwise_model.hpp"

namespace drfl::orchestrator {

using taskmodel::GradientUpdate;
using taskmodel::LayerwiseModel;

enum class Phase { kTrain, kEval };
std::string_view to_string(Phase p);

struct RoundReport {
  std::size_t episode = 0;
  Phase phase = Phase::kEval;
  std::size_t round = 0;                     // 1-based
  std::vector<std::size_t> requested;        // scheduler output per device, M = skip
  std::vector<std::size_t> actions;          // effective: skip unless selected
  std::vector<double> q;                     // dr-fl only
  std::vector<std::size_t> selected;         // ascending device ids
  std::vector<double> energy_spent;          // per device, joules
  std::vector<double> t_train, t_com;        // per device, seconds
  double val_accuracy = 0.0;                 // best exit after aggregation
  std::vector<double> depth_accuracy;        // per depth 1..M
  double e_all = 0.0;                        // remaining after the round
  double t_all = 0.0;
  double reward = 0.0;
  std::array<std::size_t, kDeviceClassCount> depleted_by_class{};
};

struct Summary {
  SchedulerKind scheduler = SchedulerKind::kGreedy;
  std::size_t episodes = 0;  // training episodes run before evaluation
  std::size_t rounds = 0;    // rounds of the evaluation episode
  double initial_accuracy = 0.0;
  std::vector<double> initial_depth_accuracy;
  double best_accuracy = 0.0;
  double final_accuracy = 0.0;
  double initial_e_all = 0.0;
  double final_e_all = 0.0;
  double total_energy_spent = 0.0;
  // First round after which every device of the class is depleted.
  std::array<std::optional<std::size_t>, kDeviceClassCount> class_depletion_round{};
  // Last round in which some device of the class trained.
  std::array<std::optional<std::size_t>, kDeviceClassCount> class_last_active_round{};
  std::array<std::size_t, kDeviceClassCount> class_size{};
  std::size_t train_steps = 0;
};

// Everything aggregation touched in one round, for external audits.
struct RoundTrace {
  std::size_t episode = 0;
  std::size_t round = 0;
  const LayerwiseModel* before = nullptr;
  std::span<const GradientUpdate> updates;
  const LayerwiseModel* after = nullptr;
};

struct RunHooks {
  std::function<void(const RoundReport&)> on_round;
  std::function<void(const RoundTrace&)> on_trace;
  // When false, local trainings run one after another on the calling thread.
  bool parallel_training = true;
};

// Per-round scheduler decision before Top-K and budget admission.
struct Decision {
  std::vector<std::size_t> actions;  // per device, M = skip
  std::vector<double> q;             // empty for baselines
  std::vector<std::size_t> priority; // non-skip devices, most preferred first
};

struct RoundInputs {
  const World& world;
  std::size_t round;
  std::size_t depth;
  const std::vector<std::vector<bool>>& masks;
  const numkernel::Tensor& observations;
  bool explore;
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual void begin_episode() {}
  virtual Decision decide(const RoundInputs& in, Rng& rng) = 0;
};

// Deepest feasible depth, skip when nothing fits; uniform random priority.
class GreedyPolicy final : public Policy {
 public:
  Decision decide(const RoundInputs& in, Rng& rng) override;
};

// Uniform over the feasible depths (skip excluded unless nothing fits).
class RandomPolicy final : public Policy {
 public:
  Decision decide(const RoundInputs& in, Rng& rng) override;
};

// Fixed depth per class, skip when that depth is infeasible.
class StaticPolicy final : public Policy {
 public:
  explicit StaticPolicy(std::array<std::size_t, kDeviceClassCount> depths) : depths_(depths) {}
  Decision decide(const RoundInputs& in, Rng& rng) override;

 private:
  std::array<std::size_t, kDeviceClassCount> depths_;
};

// QMIX agents choose depths; Top-K on the chosen-action Q orders devices.
class DrflPolicy final : public Policy {
 public:
  explicit DrflPolicy(marl::QmixLearner& learner) : learner_(learner) {}
  void begin_episode() override { learner_.begin_episode(); }
  Decision decide(const RoundInputs& in, Rng& rng) override;

 private:
  marl::QmixLearner& learner_;
};

// Observation widths used by the agents and the mixer.
std::size_t observation_width(std::size_t depth);
std::size_t global_state_width(std::size_t devices);

class Experiment {
 public:
  explicit Experiment(ExperimentConfig config);

  const ExperimentConfig& config() const { return config_; }
  const World& world() const { return world_; }
  const SeedTree& seeds() const { return seeds_; }
  const taskmodel::ModelSpec& model_spec() const { return spec_; }
  const LayerwiseModel& initial_model() const { return initial_; }
  const LayerwiseModel& model() const { return *model_; }
  // Present only for the dr-fl scheduler.
  marl::QmixLearner* learner() { return learner_.get(); }

  // Runs the training episodes (dr-fl only) and then one evaluation
  // episode; the summary describes the evaluation episode.
  Summary run(const RunHooks& hooks = {});

  // One complete FL run from fresh batteries and the initial model.
  Summary run_episode(std::size_t episode, Phase phase, Policy& policy, const RunHooks& hooks);

 private:
  ExperimentConfig config_;
  SeedTree seeds_;
  taskmodel::ModelSpec spec_;
  World world_;
  LayerwiseModel initial_;
  std::shared_ptr<const LayerwiseModel> model_;
  std::unique_ptr<marl::QmixLearner> learner_;
};

}  // namespace drfl::orchestrator
