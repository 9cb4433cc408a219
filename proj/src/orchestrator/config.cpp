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

#include "drfl/orchestrator/config.hpp"

#include <cmath>
#include <string>

#include "drfl/errors.hpp"

namespace drfl::orchestrator {

namespace {

constexpr std::array<std::string_view, kDeviceClassCount> kClassKeys{"small", "medium", "large"};

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError(key, what);
}

void require_positive(double v, const std::string& key) {
  require(std::isfinite(v) && v > 0.0, key, "must be a positive number");
}

void require_fraction(double v, const std::string& key) {
  require(std::isfinite(v) && v >= 0.0 && v <= 1.0, key, "must be in [0, 1]");
}

}  // namespace

std::string_view to_string(SchedulerKind kind) {
  switch (kind) {
    case SchedulerKind::kDrfl: return "dr-fl";
    case SchedulerKind::kGreedy: return "greedy";
    case SchedulerKind::kRandom: return "random";
    case SchedulerKind::kStatic: return "static";
  }
  return "?";
}

std::optional<SchedulerKind> parse_scheduler(std::string_view s) {
  for (SchedulerKind k : {SchedulerKind::kDrfl, SchedulerKind::kGreedy, SchedulerKind::kRandom,
                          SchedulerKind::kStatic}) {
    if (s == to_string(k)) return k;
  }
  return std::nullopt;
}

std::string_view to_string(DepthCost c) {
  return c == DepthCost::kParamFraction ? "param_fraction" : "unit";
}

std::optional<DepthCost> parse_depth_cost(std::string_view s) {
  if (s == "param_fraction") return DepthCost::kParamFraction;
  if (s == "unit") return DepthCost::kUnit;
  return std::nullopt;
}

void ExperimentConfig::validate() const {
  require(std::isfinite(devices.battery_j) && devices.battery_j >= 0.0, "devices.battery_j",
          "must be a non-negative number");
  require(devices.total() >= 1, "devices.counts", "need at least one device");
  for (std::size_t c = 0; c < kDeviceClassCount; ++c) {
    const std::string base = "devices." + std::string(kClassKeys[c]) + ".";
    const ClassProfile& p = devices.classes[c];
    require_positive(p.compute, base + "compute");
    require_positive(p.bandwidth, base + "bandwidth");
    require_positive(p.p_train, base + "p_train");
    require_positive(p.p_com, base + "p_com");
    require(std::isfinite(p.p_idle) && p.p_idle >= 0.0, base + "p_idle",
            "must be a non-negative number");
  }

  require(model.depth >= 1, "model.depth", "must be at least 1");
  require(model.block_width >= 1, "model.block_width", "must be at least 1");
  require(model.bottleneck_width >= 1, "model.bottleneck_width", "must be at least 1");

  require(data.classes >= 2, "data.classes", "must be at least 2");
  require(data.feature_width >= 1, "data.feature_width", "must be at least 1");
  require(std::isfinite(data.radius) && data.radius >= 0.0, "data.radius",
          "must be a non-negative number");
  require(std::isfinite(data.alpha) && data.alpha > 0.0, "data.alpha", "must be positive");
  require_fraction(data.validation_fraction, "data.validation_fraction");
  require(data.validation_fraction < 1.0, "data.validation_fraction",
          "must leave training samples");
  if (data.import_path.empty()) {
    require(data.samples >= devices.total() + 1, "data.samples",
            "need more samples than devices");
  }

  require_fraction(scheduler.participation, "scheduler.participation");
  const std::array<std::string_view, kDeviceClassCount> keys = kClassKeys;
  for (std::size_t c = 0; c < kDeviceClassCount; ++c) {
    const std::size_t d = scheduler.static_depths[c];
    require(d >= 1 && d <= model.depth, "scheduler.static_depths." + std::string(keys[c]),
            "must be in [1, model.depth]");
  }

  const marl::LearnerConfig& l = marl.learner;
  require(l.hidden >= 1, "marl.hidden", "must be at least 1");
  require(l.mixing_embed >= 1, "marl.mixing_embed", "must be at least 1");
  require_fraction(l.gamma, "marl.gamma");
  require_positive(l.lr, "marl.lr");
  require(l.replay_capacity >= 1, "marl.replay_capacity", "must be at least 1");
  require(l.batch_episodes >= 1, "marl.batch_episodes", "must be at least 1");
  require(l.target_period >= 1, "marl.target_period", "must be at least 1");
  require_fraction(l.eps_start, "marl.eps_start");
  require_fraction(l.eps_end, "marl.eps_end");
  require(l.eps_end <= l.eps_start, "marl.eps_end", "must not exceed marl.eps_start");
  require(std::isfinite(l.grad_clip) && l.grad_clip >= 0.0, "marl.grad_clip",
          "must be a non-negative number");
  for (auto [v, key] : {std::pair{marl.reward.w1, "marl.reward_weights.w1"},
                        std::pair{marl.reward.w2, "marl.reward_weights.w2"},
                        std::pair{marl.reward.w3, "marl.reward_weights.w3"}}) {
    require(std::isfinite(v) && v >= 0.0, key, "must be a non-negative number");
  }

  require(std::isfinite(marl.reward_scale) && marl.reward_scale > 0.0, "marl.reward_scale",
          "must be a positive number");

  require(run.max_rounds >= 1, "run.max_rounds", "must be at least 1");
  if (run.energy_budget_j) {
    require(std::isfinite(*run.energy_budget_j) && *run.energy_budget_j >= 0.0,
            "run.energy_budget_j", "must be a non-negative number or null");
  }
  require(run.train.epochs >= 1, "run.local_epochs", "must be at least 1");
  require(run.train.batch_size >= 1, "run.batch_size", "must be at least 1");
  require(std::isfinite(run.train.lr) && run.train.lr >= 0.0, "run.lr",
          "must be a non-negative number");
}

std::size_t ExperimentConfig::participants_per_round() const {
  // The slack keeps products like 0.3 * 10 = 3.0000000000000004 at 3.
  const auto k = static_cast<std::size_t>(
      std::ceil(scheduler.participation * static_cast<double>(devices.total()) - 1e-9));
  return k == 0 ? 1 : k;
}

taskmodel::ModelSpec ExperimentConfig::model_spec(std::size_t input_width,
                                                  std::size_t classes) const {
  taskmodel::ModelSpec s;
  s.depth = model.depth;
  s.input_width = input_width;
  s.block_width = model.block_width;
  s.bottleneck_width = model.bottleneck_width;
  s.classes = classes;
  return s;
}

}  // namespace drfl::orchestrator
