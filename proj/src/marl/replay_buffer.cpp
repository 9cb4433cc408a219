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

#include "drfl/marl/replay_buffer.hpp"

#include "drfl/errors.hpp"

namespace drfl::marl {

void Episode::validate(std::size_t action_count) const {
  const std::size_t t = steps();
  if (t == 0) throw ContractError("episode: no steps");
  if (obs.size() != t + 1 || masks.size() != t + 1 || states.size() != t + 1 ||
      actions.size() != t) {
    throw ContractError("episode: inconsistent step arrays");
  }
  const std::size_t n = agents();
  for (std::size_t i = 0; i <= t; ++i) {
    if (obs[i].rank() != 2 || obs[i].shape()[0] != n || masks[i].size() != n * action_count) {
      throw ContractError("episode: agent count or action width differs between steps");
    }
  }
  for (const auto& a : actions) {
    if (a.size() != n) throw ContractError("episode: joint action of wrong width");
    for (std::size_t v : a) {
      if (v >= action_count) throw ContractError("episode: action out of range");
    }
  }
}

EpisodeBuilder::EpisodeBuilder(Tensor obs, std::vector<std::uint8_t> mask, Tensor state) {
  episode_.obs.push_back(std::move(obs));
  episode_.masks.push_back(std::move(mask));
  episode_.states.push_back(std::move(state));
}

void EpisodeBuilder::add_step(std::vector<std::size_t> actions, double reward, Tensor next_obs,
                              std::vector<std::uint8_t> next_mask, Tensor next_state) {
  episode_.actions.push_back(std::move(actions));
  episode_.rewards.push_back(reward);
  episode_.obs.push_back(std::move(next_obs));
  episode_.masks.push_back(std::move(next_mask));
  episode_.states.push_back(std::move(next_state));
}

Episode EpisodeBuilder::finish() && { return std::move(episode_); }

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw ContractError("replay buffer: capacity must be positive");
}

void ReplayBuffer::add(Episode episode) {
  if (episode.steps() == 0) throw ContractError("replay buffer: empty episode");
  if (episodes_.size() == capacity_) episodes_.pop_front();
  episodes_.push_back(std::move(episode));
  ++added_;
}

std::vector<const Episode*> ReplayBuffer::sample(std::size_t count, Rng& rng) const {
  if (episodes_.empty()) throw ContractError("replay buffer: sampling from an empty buffer");
  std::vector<const Episode*> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(&episodes_[uniform_index(rng, episodes_.size())]);
  }
  return out;
}

}  // namespace drfl::marl
