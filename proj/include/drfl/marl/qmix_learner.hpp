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
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "drfl/marl/networks.hpp"
#include "drfl/marl/replay_buffer.hpp"
#include "drfl/numkernel/optim.hpp"

namespace drfl::marl {

struct LearnerConfig {
  MixerKind mixer = MixerKind::kQmix;
  std::size_t hidden = 64;
  std::size_t mixing_embed = 32;
  double gamma = 0.99;
  double lr = 5e-4;
  std::size_t replay_capacity = 5000;
  std::size_t batch_episodes = 32;
  std::size_t window = 0;  // 0: train on whole episodes
  std::size_t target_period = 200;
  double eps_start = 1.0;
  double eps_end = 0.05;
  std::size_t eps_decay_steps = 50000;
  double grad_clip = 10.0;
};

// Per-agent decision a in {0..A-1} together with the greedy Q-value of
// the chosen action (used by Top-K).
struct Selection {
  std::vector<std::size_t> actions;
  std::vector<double> chosen_q;
  Tensor q_values;  // [N x A]
};

class QmixLearner {
 public:
  QmixLearner(const AgentNetSpec& agent, std::size_t agents, std::size_t state_dim,
              const LearnerConfig& config, std::uint64_t init_seed);

  const LearnerConfig& config() const { return config_; }
  const AgentNetSpec& agent_spec() const { return agent_spec_; }
  const MixerSpec& mixer_spec() const { return mixer_spec_; }
  std::size_t agents() const { return mixer_spec_.agents; }
  std::size_t action_count() const { return agent_spec_.actions; }

  const AgentNetParams& agent_params() const { return agent_; }
  const MixerParams& mixer_params() const { return mixer_; }
  const AgentNetParams& target_agent_params() const { return target_agent_; }
  const MixerParams& target_mixer_params() const { return target_mixer_; }
  // Replaces online parameters (targets untouched).
  void set_parameters(AgentNetParams agent, MixerParams mixer);

  ReplayBuffer& replay() { return replay_; }
  const ReplayBuffer& replay() const { return replay_; }

  // Resets the acting recurrent state of every agent to zero.
  void begin_episode();
  const Tensor& acting_hidden() const { return hidden_; }

  // obs [N x obs_dim]; masks[n][a] true when action a is allowed for agent
  // n. Greedy = masked argmax (lowest index on ties); when `explore`, each
  // agent with probability epsilon() picks uniformly among its allowed
  // actions instead. Advances the acting hidden state.
  Selection select_actions(const Tensor& obs, std::span<const std::vector<bool>> masks,
                           bool explore, Rng& rng);

  // One gradient step on a batch sampled from the replay buffer; returns
  // the masked mean squared TD error. Syncs the target every
  // target_period steps and advances the exploration schedule.
  double train_step(Rng& rng);
  // Same, on an explicit batch (whole episodes, no windowing).
  double train_on(std::span<const Episode* const> batch, Rng& rng);

  void sync_target();

  double epsilon() const;
  std::size_t train_steps() const { return train_steps_; }

  // Checkpoint: "DRFLQMX1", u32 version, u32 agents, obs_dim, actions,
  // hidden, state_dim, embed, mixer kind; f64 gamma, epsilon; u64 train
  // steps; then online agent, online mixer, target agent, target mixer
  // tensors (numkernel::io layout).
  void save(const std::string& path) const;
  void load(const std::string& path);

 private:
  struct Window {
    const Episode* episode;
    std::size_t start;
    std::size_t length;
  };
  double train_windows(const std::vector<Window>& windows);
  ParameterSet online_flat() const;
  void set_online_flat(const ParameterSet& flat);

  LearnerConfig config_;
  AgentNetSpec agent_spec_;
  MixerSpec mixer_spec_;
  AgentNetParams agent_, target_agent_;
  MixerParams mixer_, target_mixer_;
  numkernel::Adam optimizer_;
  ReplayBuffer replay_;
  Tensor hidden_;
  std::size_t train_steps_ = 0;
};

// Free-function forms of the learner operations.
Selection select_actions(QmixLearner& learner, const Tensor& obs,
                         std::span<const std::vector<bool>> masks, bool explore, Rng& rng);
void sync_target(QmixLearner& learner);

}  // namespace drfl::marl
