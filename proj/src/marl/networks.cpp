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

#include "drfl/marl/networks.hpp"

#include <cmath>

#include "drfl/errors.hpp"

namespace drfl::marl {

namespace nk = numkernel;

namespace {

void init_uniform(Tensor& t, double bound, Rng& rng) {
  for (double& v : t.values()) v = bound * (2.0 * uniform01(rng) - 1.0);
}

// Linear layer init: U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weight and bias.
void init_linear(Tensor& w, Tensor& b, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(w.shape()[0]));
  init_uniform(w, bound, rng);
  init_uniform(b, bound, rng);
}

}  // namespace

AgentNetParams AgentNetParams::zeros(const AgentNetSpec& s) {
  if (s.obs_dim == 0 || s.hidden == 0 || s.actions == 0) {
    throw ContractError("agent net: dimensions must be positive");
  }
  AgentNetParams p;
  p.fc1_w = Tensor({s.obs_dim, s.hidden});
  p.fc1_b = Tensor({s.hidden});
  p.gru = nk::GruCellParams::zeros(s.hidden, s.hidden);
  p.fc2_w = Tensor({s.hidden, s.actions});
  p.fc2_b = Tensor({s.actions});
  return p;
}

AgentNetParams AgentNetParams::random(const AgentNetSpec& s, Rng& rng) {
  AgentNetParams p = zeros(s);
  init_linear(p.fc1_w, p.fc1_b, rng);
  p.gru = nk::GruCellParams::random(s.hidden, s.hidden, rng);
  init_linear(p.fc2_w, p.fc2_b, rng);
  return p;
}

AgentNetSpec AgentNetParams::spec() const {
  return {fc1_w.shape().at(0), fc1_w.shape().at(1), fc2_w.shape().at(1)};
}

ParameterSet AgentNetParams::flatten() const {
  ParameterSet out{fc1_w, fc1_b};
  for (Tensor& t : gru.flatten()) out.push_back(std::move(t));
  out.push_back(fc2_w);
  out.push_back(fc2_b);
  return out;
}

AgentNetParams AgentNetParams::unflatten(const ParameterSet& p, std::size_t o) {
  if (p.size() < o + kTensorCount) throw ContractError("agent net: too few tensors");
  AgentNetParams a;
  a.fc1_w = p[o];
  a.fc1_b = p[o + 1];
  a.gru = nk::GruCellParams::unflatten(p, o + 2);
  a.fc2_w = p[o + 2 + nk::GruCellParams::kTensorCount];
  a.fc2_b = p[o + 3 + nk::GruCellParams::kTensorCount];
  return a;
}

std::vector<Var> AgentNetVars::list() const {
  return {fc1_w,    fc1_b,    gru.w_ir, gru.w_iz, gru.w_in, gru.w_hr, gru.w_hz, gru.w_hn,
          gru.b_ir, gru.b_iz, gru.b_in, gru.b_hr, gru.b_hz, gru.b_hn, fc2_w,    fc2_b};
}

AgentNetVars bind(Tape& tape, const AgentNetParams& p, bool trainable) {
  auto put = [&](const Tensor& t) { return trainable ? tape.parameter(t) : tape.constant(t); };
  AgentNetVars v;
  v.fc1_w = put(p.fc1_w);
  v.fc1_b = put(p.fc1_b);
  v.gru = nk::bind(tape, p.gru, trainable);
  v.fc2_w = put(p.fc2_w);
  v.fc2_b = put(p.fc2_b);
  return v;
}

AgentStep agent_forward(Var obs, Var hidden, const AgentNetVars& net) {
  Var x = nk::relu(nk::dense(obs, net.fc1_w, net.fc1_b));
  Var h = nk::gru_step(x, hidden, net.gru);
  return {nk::dense(h, net.fc2_w, net.fc2_b), h};
}

std::pair<Tensor, Tensor> agent_q(const AgentNetParams& net, const Tensor& obs,
                                  const Tensor& hidden) {
  Tape tape;
  const AgentNetVars vars = bind(tape, net, false);
  const AgentStep step = agent_forward(tape.constant(obs), tape.constant(hidden), vars);
  return {step.q.value(), step.hidden.value()};
}

std::string_view to_string(MixerKind kind) {
  return kind == MixerKind::kQmix ? "qmix" : "vdn";
}

MixerParams MixerParams::zeros(const MixerSpec& s) {
  if (s.agents == 0 || s.state_dim == 0 || s.embed == 0) {
    throw ContractError("mixer: dimensions must be positive");
  }
  MixerParams p;
  p.w1_w = Tensor({s.state_dim, s.agents * s.embed});
  p.w1_b = Tensor({s.agents * s.embed});
  p.b1_w = Tensor({s.state_dim, s.embed});
  p.b1_b = Tensor({s.embed});
  p.w2_w = Tensor({s.state_dim, s.embed});
  p.w2_b = Tensor({s.embed});
  p.v1_w = Tensor({s.state_dim, s.embed});
  p.v1_b = Tensor({s.embed});
  p.v2_w = Tensor({s.embed, 1});
  p.v2_b = Tensor({1});
  return p;
}

MixerParams MixerParams::random(const MixerSpec& s, Rng& rng) {
  MixerParams p = zeros(s);
  init_linear(p.w1_w, p.w1_b, rng);
  init_linear(p.b1_w, p.b1_b, rng);
  init_linear(p.w2_w, p.w2_b, rng);
  init_linear(p.v1_w, p.v1_b, rng);
  init_linear(p.v2_w, p.v2_b, rng);
  return p;
}

ParameterSet MixerParams::flatten() const {
  return {w1_w, w1_b, b1_w, b1_b, w2_w, w2_b, v1_w, v1_b, v2_w, v2_b};
}

MixerParams MixerParams::unflatten(const ParameterSet& p, std::size_t o) {
  if (p.size() < o + kTensorCount) throw ContractError("mixer: too few tensors");
  return {p[o],     p[o + 1], p[o + 2], p[o + 3], p[o + 4],
          p[o + 5], p[o + 6], p[o + 7], p[o + 8], p[o + 9]};
}

std::vector<Var> MixerVars::list() const {
  return {w1_w, w1_b, b1_w, b1_b, w2_w, w2_b, v1_w, v1_b, v2_w, v2_b};
}

MixerVars bind(Tape& tape, const MixerParams& p, bool trainable) {
  auto put = [&](const Tensor& t) { return trainable ? tape.parameter(t) : tape.constant(t); };
  return {put(p.w1_w), put(p.w1_b), put(p.b1_w), put(p.b1_b), put(p.w2_w),
          put(p.w2_b), put(p.v1_w), put(p.v1_b), put(p.v2_w), put(p.v2_b)};
}

Var mix(Var q_chosen, Var state, const MixerVars* vars, const MixerSpec& spec) {
  const Tensor& qv = q_chosen.value();
  if (qv.rank() != 2 || qv.shape()[1] != spec.agents) {
    throw ContractError("mix: expected [B x " + std::to_string(spec.agents) + "] agent values, got " +
                        nk::shape_string(qv.shape()));
  }
  if (spec.kind == MixerKind::kVdn) {
    Var ones = q_chosen.tape->constant(Tensor({spec.agents, 1}, 1.0));
    return nk::matmul(q_chosen, ones);
  }
  if (vars == nullptr) throw ContractError("mix: qmix mode needs mixer parameters");
  const Tensor& sv = state.value();
  if (sv.rank() != 2 || sv.shape()[0] != qv.shape()[0] || sv.shape()[1] != spec.state_dim) {
    throw ContractError("mix: state " + nk::shape_string(sv.shape()) + " does not match");
  }
  Var w1 = nk::abs(nk::dense(state, vars->w1_w, vars->w1_b));
  Var b1 = nk::dense(state, vars->b1_w, vars->b1_b);
  Var hidden = nk::elu(nk::add(nk::row_matvec(q_chosen, w1, spec.embed), b1));
  Var w2 = nk::abs(nk::dense(state, vars->w2_w, vars->w2_b));
  Var v = nk::dense(nk::relu(nk::dense(state, vars->v1_w, vars->v1_b)), vars->v2_w, vars->v2_b);
  return nk::add(nk::row_dot(hidden, w2), v);
}

std::vector<double> mix_values(const Tensor& q_chosen, const Tensor& state,
                               const MixerParams& params, const MixerSpec& spec) {
  Tape tape;
  MixerVars vars;
  if (spec.kind == MixerKind::kQmix) vars = bind(tape, params, false);
  const Var out = mix(tape.constant(q_chosen), tape.constant(state), &vars, spec);
  const Tensor& v = out.value();
  return std::vector<double>(v.values().begin(), v.values().end());
}

}  // namespace drfl::marl
