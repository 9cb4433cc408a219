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
#include <deque>
#include <vector>

#include "drfl/numkernel/tensor.hpp"
#include "drfl/rng.hpp"

namespace drfl::marl {

using numkernel::Tensor;

// One complete trajectory. Step t stores the observations, masks and state
// the agents acted on, the (effective) joint action and the team reward;
// index T holds the final observation/mask/state.
struct Episode {
  std::vector<Tensor> obs;                        // T+1 of [N x obs_dim]
  std::vector<std::vector<std::uint8_t>> masks;   // T+1 of N*A
  std::vector<Tensor> states;                     // T+1 of [S]
  std::vector<std::vector<std::size_t>> actions;  // T of N
  std::vector<double> rewards;                    // T

  std::size_t steps() const { return rewards.size(); }
  std::size_t agents() const { return obs.empty() ? 0 : obs.front().shape()[0]; }
  // Throws ContractError if the arrays disagree in length or width.
  void validate(std::size_t action_count) const;
};

// Accumulates one episode step by step.
class EpisodeBuilder {
 public:
  EpisodeBuilder(Tensor obs, std::vector<std::uint8_t> mask, Tensor state);

  void add_step(std::vector<std::size_t> actions, double reward, Tensor next_obs,
                std::vector<std::uint8_t> next_mask, Tensor next_state);

  std::size_t steps() const { return episode_.steps(); }
  Episode finish() &&;

 private:
  Episode episode_;
};

// Ring buffer of complete episodes.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void add(Episode episode);
  std::size_t size() const { return episodes_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::size_t total_added() const { return added_; }
  const Episode& at(std::size_t i) const { return episodes_.at(i); }

  // Uniform sample with replacement.
  std::vector<const Episode*> sample(std::size_t count, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t added_ = 0;
  std::deque<Episode> episodes_;
};

}  // namespace drfl::marl
