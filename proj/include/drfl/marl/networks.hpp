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
#include <string_view>
#include <utility>

#include "drfl/numkernel/gru.hpp"
#include "drfl/numkernel/ops.hpp"
#include "drfl/rng.hpp"

namespace drfl::marl {

using numkernel::ParameterSet;
using numkernel::Tape;
using numkernel::Tensor;
using numkernel::Var;

struct AgentNetSpec {
  std::size_t obs_dim = 0;
  std::size_t hidden = 64;
  std::size_t actions = 0;  // M + 1
};

// Input MLP -> GRU -> output MLP. One parameter set serves every agent.
struct AgentNetParams {
  Tensor fc1_w, fc1_b;  // [obs x H], [H]
  numkernel::GruCellParams gru;
  Tensor fc2_w, fc2_b;  // [H x A], [A]

  static AgentNetParams zeros(const AgentNetSpec& spec);
  static AgentNetParams random(const AgentNetSpec& spec, Rng& rng);

  AgentNetSpec spec() const;
  ParameterSet flatten() const;
  static AgentNetParams unflatten(const ParameterSet& p, std::size_t offset = 0);
  static constexpr std::size_t kTensorCount = 4 + numkernel::GruCellParams::kTensorCount;
};

struct AgentNetVars {
  Var fc1_w, fc1_b;
  numkernel::GruCellVars gru;
  Var fc2_w, fc2_b;

  std::vector<Var> list() const;
};

AgentNetVars bind(Tape& tape, const AgentNetParams& p, bool trainable);

struct AgentStep {
  Var q;       // [rows x A]
  Var hidden;  // [rows x H]
};

AgentStep agent_forward(Var obs, Var hidden, const AgentNetVars& net);

// Tape-free convenience for acting: obs [rows x obs_dim], hidden [rows x H].
std::pair<Tensor, Tensor> agent_q(const AgentNetParams& net, const Tensor& obs,
                                  const Tensor& hidden);

enum class MixerKind { kQmix, kVdn };

std::string_view to_string(MixerKind kind);

struct MixerSpec {
  MixerKind kind = MixerKind::kQmix;
  std::size_t agents = 0;
  std::size_t state_dim = 0;
  std::size_t embed = 32;
};

// State-conditioned monotone mixer. Hypernetworks map the global state to
// |W1| [N x E], b1 [E], |w2| [E] and a state value V(s) (two layers):
//   Q_tot = elu(q W1 + b1) . w2 + V(s)
// In VDN mode there are no parameters and Q_tot = sum(q).
struct MixerParams {
  Tensor w1_w, w1_b;  // [S x N*E], [N*E]
  Tensor b1_w, b1_b;  // [S x E], [E]
  Tensor w2_w, w2_b;  // [S x E], [E]
  Tensor v1_w, v1_b;  // [S x E], [E]
  Tensor v2_w, v2_b;  // [E x 1], [1]

  static MixerParams zeros(const MixerSpec& spec);
  static MixerParams random(const MixerSpec& spec, Rng& rng);

  ParameterSet flatten() const;
  static MixerParams unflatten(const ParameterSet& p, std::size_t offset = 0);
  static constexpr std::size_t kTensorCount = 10;
};

struct MixerVars {
  Var w1_w, w1_b, b1_w, b1_b, w2_w, w2_b, v1_w, v1_b, v2_w, v2_b;
  std::vector<Var> list() const;
};

MixerVars bind(Tape& tape, const MixerParams& p, bool trainable);

// q_chosen [B x N], state [B x S] -> Q_tot [B x 1]. `vars` is ignored in
// VDN mode.
Var mix(Var q_chosen, Var state, const MixerVars* vars, const MixerSpec& spec);

// Tape-free evaluation of mix(); returns one Q_tot per row.
std::vector<double> mix_values(const Tensor& q_chosen, const Tensor& state,
                               const MixerParams& params, const MixerSpec& spec);

}  // namespace drfl::marl
