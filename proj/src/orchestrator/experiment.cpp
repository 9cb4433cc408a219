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

#include "drfl/orchestrator/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>

#include "drfl/errors.hpp"
#include "drfl/marl/dual_selection.hpp"
#include "drfl/taskmodel/training.hpp"

namespace drfl::orchestrator {

namespace {

std::vector<std::size_t> shuffled_candidates(const std::vector<std::size_t>& actions,
                                             std::size_t skip, Rng& rng) {
  std::vector<std::size_t> ids;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (actions[i] != skip) ids.push_back(i);
  }
  shuffle(ids.begin(), ids.end(), rng);
  return ids;
}

double safe_ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

// The server answers with its most accurate exit.
double best_exit(const std::vector<double>& depth_accuracy) {
  return *std::max_element(depth_accuracy.begin(), depth_accuracy.end());
}

}  // namespace

std::string_view to_string(Phase p) { return p == Phase::kTrain ? "train" : "eval"; }

std::size_t observation_width(std::size_t depth) {
  return marl::AgentObservation::width(depth + 1);
}

std::size_t global_state_width(std::size_t devices) { return 3 * devices + 1; }

Decision GreedyPolicy::decide(const RoundInputs& in, Rng& rng) {
  Decision d;
  d.actions.assign(in.world.size(), in.depth);
  for (std::size_t n = 0; n < in.world.size(); ++n) {
    for (std::size_t a = in.depth; a-- > 0;) {
      if (in.masks[n][a]) {
        d.actions[n] = a;
        break;
      }
    }
  }
  d.priority = shuffled_candidates(d.actions, in.depth, rng);
  return d;
}

Decision RandomPolicy::decide(const RoundInputs& in, Rng& rng) {
  Decision d;
  d.actions.assign(in.world.size(), in.depth);
  for (std::size_t n = 0; n < in.world.size(); ++n) {
    std::vector<std::size_t> allowed;
    for (std::size_t a = 0; a < in.depth; ++a) {
      if (in.masks[n][a]) allowed.push_back(a);
    }
    if (!allowed.empty()) d.actions[n] = allowed[uniform_index(rng, allowed.size())];
  }
  d.priority = shuffled_candidates(d.actions, in.depth, rng);
  return d;
}

Decision StaticPolicy::decide(const RoundInputs& in, Rng& rng) {
  Decision d;
  d.actions.assign(in.world.size(), in.depth);
  for (std::size_t n = 0; n < in.world.size(); ++n) {
    const std::size_t a = depths_[static_cast<std::size_t>(in.world.profiles[n].cls)] - 1;
    if (a < in.depth && in.masks[n][a]) d.actions[n] = a;
  }
  d.priority = shuffled_candidates(d.actions, in.depth, rng);
  return d;
}

Decision DrflPolicy::decide(const RoundInputs& in, Rng& rng) {
  marl::Selection sel = learner_.select_actions(in.observations, in.masks, in.explore, rng);
  std::vector<marl::AgentChoice> choices;
  for (std::size_t n = 0; n < sel.actions.size(); ++n) {
    choices.push_back({n, sel.actions[n], sel.chosen_q[n]});
  }
  Decision d;
  d.priority = marl::topk_select(choices, choices.size(), in.depth);
  d.actions = std::move(sel.actions);
  d.q = std::move(sel.chosen_q);
  return d;
}

Experiment::Experiment(ExperimentConfig config)
    : config_(std::move(config)),
      seeds_(config_.run.seed),
      spec_(config_.model_spec(config_.data.feature_width, config_.data.classes)),
      initial_(spec_) {
  config_.validate();
  spec_.validate();
  std::vector<std::size_t> counts;
  for (std::size_t m = 1; m <= spec_.depth; ++m) counts.push_back(initial_.param_count(m));
  world_ = build_world(config_, seeds_, counts);
  Rng init = seeds_.stream("init", 0);
  initial_ = LayerwiseModel::initialize(spec_, init);
  model_ = std::make_shared<const LayerwiseModel>(initial_);
  if (config_.scheduler.kind == SchedulerKind::kDrfl) {
    const marl::AgentNetSpec agent{observation_width(spec_.depth), config_.marl.learner.hidden,
                                   spec_.depth + 1};
    learner_ = std::make_unique<marl::QmixLearner>(agent, world_.size(),
                                                   global_state_width(world_.size()),
                                                   config_.marl.learner, seeds_.derive("init", 1));
  }
}

Summary Experiment::run(const RunHooks& hooks) {
  std::unique_ptr<Policy> policy;
  switch (config_.scheduler.kind) {
    case SchedulerKind::kDrfl: policy = std::make_unique<DrflPolicy>(*learner_); break;
    case SchedulerKind::kGreedy: policy = std::make_unique<GreedyPolicy>(); break;
    case SchedulerKind::kRandom: policy = std::make_unique<RandomPolicy>(); break;
    case SchedulerKind::kStatic:
      policy = std::make_unique<StaticPolicy>(config_.scheduler.static_depths);
      break;
  }
  std::size_t episodes = 0;
  if (learner_) {
    episodes = config_.marl.episodes;
    for (std::size_t e = 0; e < episodes; ++e) run_episode(e, Phase::kTrain, *policy, hooks);
  }
  Summary s = run_episode(episodes, Phase::kEval, *policy, hooks);
  s.episodes = episodes;
  return s;
}

Summary Experiment::run_episode(std::size_t episode, Phase phase, Policy& policy,
                                const RunHooks& hooks) {
  const std::size_t n = world_.size();
  const std::size_t depth = spec_.depth;
  const std::size_t skip = depth;
  const std::size_t k = config_.participants_per_round();
  const bool learn = learner_ != nullptr && phase == Phase::kTrain;
  const bool explore = learn;
  const double max_rounds = static_cast<double>(config_.run.max_rounds);

  world_.reset_batteries();
  std::shared_ptr<const LayerwiseModel> model = std::make_shared<const LayerwiseModel>(initial_);
  policy.begin_episode();
  Rng choice_rng = learner_ ? seeds_.stream("exploration", episode)
                            : seeds_.stream("baseline-choice", episode);
  Rng replay_rng = seeds_.stream("replay", episode);

  Summary summary;
  summary.scheduler = config_.scheduler.kind;
  for (std::size_t m = 1; m <= depth; ++m) {
    summary.initial_depth_accuracy.push_back(taskmodel::evaluate(*model, m, world_.validation));
  }
  summary.initial_accuracy = best_exit(summary.initial_depth_accuracy);
  summary.best_accuracy = summary.final_accuracy = summary.initial_accuracy;
  summary.initial_e_all = summary.final_e_all = world_.e_all();
  for (const DeviceProfile& p : world_.profiles) ++summary.class_size[static_cast<std::size_t>(p.cls)];

  auto record_depletion = [&](std::size_t round) {
    std::array<std::size_t, kDeviceClassCount> depleted{};
    for (std::size_t i = 0; i < n; ++i) {
      if (world_.states[i].depleted) ++depleted[static_cast<std::size_t>(world_.profiles[i].cls)];
    }
    for (std::size_t c = 0; c < kDeviceClassCount; ++c) {
      if (summary.class_size[c] > 0 && depleted[c] == summary.class_size[c] &&
          !summary.class_depletion_round[c]) {
        summary.class_depletion_round[c] = round;
      }
    }
    return depleted;
  };
  record_depletion(0);

  std::vector<std::size_t> prev_actions(n, skip);
  auto observe = [&](std::size_t round, numkernel::Tensor& obs, std::vector<std::vector<bool>>& masks,
                     numkernel::Tensor& state) {
    std::vector<marl::AgentObservation> rows(n);
    masks.assign(n, {});
    state = numkernel::Tensor({global_state_width(n)}, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const DeviceProfile& p = world_.profiles[i];
      rows[i].data_size = safe_ratio(static_cast<double>(p.shard_size),
                                     static_cast<double>(world_.max_shard));
      rows[i].compute = safe_ratio(p.compute, world_.max_compute);
      rows[i].energy = std::clamp(safe_ratio(world_.states[i].remaining_energy, world_.battery), 0.0, 1.0);
      rows[i].round = std::min(1.0, static_cast<double>(round - 1) / max_rounds);
      rows[i].prev_action = prev_actions[i];
      masks[i] = world_.mask(i);
      state[3 * i] = rows[i].data_size;
      state[3 * i + 1] = rows[i].compute;
      state[3 * i + 2] = rows[i].energy;
    }
    state[3 * n] = std::min(1.0, static_cast<double>(round - 1) / max_rounds);
    obs = marl::stack_observations(rows, depth + 1);
  };
  auto flat_mask = [&](const std::vector<std::vector<bool>>& masks) {
    std::vector<std::uint8_t> out;
    for (const auto& m : masks) {
      for (bool b : m) out.push_back(b ? 1 : 0);
    }
    return out;
  };

  numkernel::Tensor obs, state;
  std::vector<std::vector<bool>> masks;
  observe(1, obs, masks, state);
  std::optional<marl::EpisodeBuilder> builder;
  if (learn) builder.emplace(obs, flat_mask(masks), state);

  double budget_left = config_.run.energy_budget_j.value_or(std::numeric_limits<double>::infinity());
  double acc_prev = summary.initial_accuracy;
  std::vector<double> depth_acc_prev = summary.initial_depth_accuracy;
  EnergySum spent;
  std::size_t stale = 0;

  for (std::size_t t = 1; t <= config_.run.max_rounds; ++t) {
    if (world_.all_depleted()) break;
    double cheapest_alive = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (!world_.states[i].depleted) cheapest_alive = std::min(cheapest_alive, world_.cheapest[i]);
    }
    if (budget_left < cheapest_alive) break;

    // Step 3: dual selection, then Top-K under the remaining budget.
    const RoundInputs inputs{world_, t, depth, masks, obs, explore};
    Decision decision = policy.decide(inputs, choice_rng);
    if (decision.actions.size() != n) throw InvariantError("scheduler returned wrong action count");
    for (std::size_t i = 0; i < n; ++i) {
      if (decision.actions[i] > skip || !masks[i][decision.actions[i]]) {
        throw InvariantError("scheduler picked an infeasible action for device " + std::to_string(i));
      }
    }
    std::vector<std::size_t> selected;
    double committed = 0.0;
    for (std::size_t id : decision.priority) {
      if (selected.size() == k) break;
      if (decision.actions.at(id) == skip) throw InvariantError("skip device in priority list");
      const double e = world_.costs.cost(world_.profiles[id], decision.actions[id] + 1).energy();
      if (committed + e <= budget_left) {
        selected.push_back(id);
        committed += e;
      }
    }
    std::sort(selected.begin(), selected.end());

    RoundReport report;
    report.episode = episode;
    report.phase = phase;
    report.round = t;
    report.requested = decision.actions;
    report.actions.assign(n, skip);
    report.q = decision.q;
    report.selected = selected;
    report.energy_spent.assign(n, 0.0);
    report.t_train.assign(n, 0.0);
    report.t_com.assign(n, 0.0);

    std::vector<simworld::ActionCost> costs(selected.size());
    for (std::size_t j = 0; j < selected.size(); ++j) {
      const std::size_t id = selected[j];
      report.actions[id] = decision.actions[id];
      costs[j] = world_.costs.cost(world_.profiles[id], decision.actions[id] + 1);
      report.t_all = std::max(report.t_all, costs[j].time());
    }
    if (config_.devices.idle_energy) {
      for (std::size_t j = 0; j < selected.size(); ++j) {
        const std::size_t id = selected[j];
        const double wait = report.t_all - costs[j].time();
        const double room = std::min(world_.states[id].remaining_energy - costs[j].e_train - costs[j].e_com,
                                     budget_left - committed);
        costs[j].e_idle = std::clamp(world_.profiles[id].p_idle * wait, 0.0, std::max(0.0, room));
        committed += costs[j].e_idle;
      }
    }

    // Steps 4 and 5: dispatch views of the round snapshot and train locally.
    std::vector<GradientUpdate> updates(selected.size());
    std::vector<std::exception_ptr> failures(selected.size());
    auto train_one = [&](std::size_t j) {
      try {
        const std::size_t id = selected[j];
        const taskmodel::SubModelView view = taskmodel::extract_submodel(model, decision.actions[id] + 1);
        updates[j] = taskmodel::local_train(view, world_.shards[id], config_.run.train,
                                            seeds_.derive("local-train", episode, t, id), id);
      } catch (...) {
        failures[j] = std::current_exception();
      }
    };
    const auto jobs = static_cast<std::ptrdiff_t>(selected.size());
    if (hooks.parallel_training) {
#pragma omp parallel for schedule(dynamic, 1)
      for (std::ptrdiff_t j = 0; j < jobs; ++j) train_one(static_cast<std::size_t>(j));
    } else {
      for (std::ptrdiff_t j = 0; j < jobs; ++j) train_one(static_cast<std::size_t>(j));
    }
    for (const auto& f : failures) {
      if (f) std::rethrow_exception(f);
    }

    const double e_before = world_.e_all();
    for (std::size_t j = 0; j < selected.size(); ++j) {
      const std::size_t id = selected[j];
      world_.states[id] = simworld::charge_round(world_.states[id], costs[j], world_.cheapest[id]);
      report.energy_spent[id] = costs[j].energy();
      report.t_train[id] = costs[j].t_train;
      report.t_com[id] = costs[j].t_com;
    }
    budget_left -= committed;
    report.e_all = world_.e_all();

    // Step 2 of the next round commits this aggregate; it is evaluated now
    // so the reward can see it.
    std::shared_ptr<const LayerwiseModel> next = model;
    if (!updates.empty()) {
      next = std::make_shared<const LayerwiseModel>(taskmodel::aggregate_layerwise(*model, updates));
    }
    if (hooks.on_trace) hooks.on_trace({episode, t, model.get(), updates, next.get()});
    if (updates.empty()) {
      report.depth_accuracy = depth_acc_prev;
    } else {
      for (std::size_t m = 1; m <= depth; ++m) {
        report.depth_accuracy.push_back(taskmodel::evaluate(*next, m, world_.validation));
      }
    }
    report.val_accuracy = best_exit(report.depth_accuracy);
    report.reward = marl::compute_reward(report.val_accuracy, acc_prev, e_before,
                                         report.e_all, report.t_all, config_.marl.reward);
    report.depleted_by_class = record_depletion(t);

    bool improved = report.val_accuracy > summary.best_accuracy + 1e-4;
    summary.best_accuracy = std::max(summary.best_accuracy, report.val_accuracy);
    summary.final_accuracy = report.val_accuracy;
    summary.rounds = t;
    for (std::size_t id : selected) {
      summary.class_last_active_round[static_cast<std::size_t>(world_.profiles[id].cls)] = t;
    }
    acc_prev = report.val_accuracy;
    depth_acc_prev = report.depth_accuracy;
    for (double e : report.energy_spent) spent.add(e);
    model = std::move(next);
    prev_actions = report.actions;

    observe(t + 1, obs, masks, state);
    if (builder) {
      builder->add_step(report.actions, config_.marl.reward_scale * report.reward, obs, flat_mask(masks), state);
      if (learner_->replay().size() >= std::max<std::size_t>(1, config_.marl.warmup_episodes)) {
        learner_->train_step(replay_rng);
      }
    }
    if (hooks.on_round) hooks.on_round(report);

    stale = improved ? 0 : stale + 1;
    if (config_.run.patience > 0 && stale >= config_.run.patience) break;
  }

  if (builder && builder->steps() > 0) learner_->replay().add(std::move(*builder).finish());
  model_ = model;
  summary.final_e_all = world_.e_all();
  summary.total_energy_spent = spent.value();
  if (learner_) summary.train_steps = learner_->train_steps();
  return summary;
}

}  // namespace drfl::orchestrator
