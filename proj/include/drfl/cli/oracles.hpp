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
#include <string>
#include <string_view>
#include <vector>

#include "drfl/marl/networks.hpp"

namespace drfl::cli {

struct OracleResult {
  std::string name;
  bool pass = false;
  double observed = 0.0;
  double threshold = 0.0;
  std::string detail;
};

enum class GradFamily { kDense, kGru, kSoftmaxCe, kMixer };
std::string_view to_string(GradFamily f);

// Worst relative error over `instances` random small problems of one family.
double grad_family_max_error(GradFamily family, std::size_t instances, std::uint64_t seed);

// Homogeneous full-depth population, every device participating for
// `rounds` rounds; returns the largest |run - oracle| over all rounds and
// tensors, where the oracle re-trains and averages sequentially.
double fedavg_max_deviation(std::size_t rounds, std::uint64_t seed);

struct MatrixGameResult {
  double optimal_rate = 0.0;  // share of greedy evaluation episodes at the optimum
  std::size_t train_steps = 0;
};
// Two agents, two actions, one step: payoff 8 for joint action (1, 1), else 0.
MatrixGameResult matrix_game(marl::MixerKind mixer, std::size_t train_steps,
                             std::size_t eval_episodes, std::uint64_t seed);

// "fedavg", "gradcheck", "matrix-game" or "all".
std::vector<OracleResult> run_oracles(std::string_view which);

}  // namespace drfl::cli
