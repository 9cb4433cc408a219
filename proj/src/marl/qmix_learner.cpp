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

#include "drfl/marl/qmix_learner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "drfl/errors.hpp"
#include "drfl/numkernel/tensor_io.hpp"

namespace drfl::marl {

namespace nk = numkernel;

namespace {

std::size_t masked_argmax(const double* q, std::size_t a, const std::vector<bool>& mask) {
  std::size_t best = a;
  for (std::size_t i = 0; i < a; ++i) {
    if (!mask[i]) continue;
    if (best == a || q[i] > q[best]) best = i;
  }
  return best;
}

ParameterSet concat(ParameterSet a, const ParameterSet& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

QmixLearner::QmixLearner(const AgentNetSpec& agent, std::size_t agents, std::size_t state_dim,
                         const LearnerConfig& config, std::uint64_t init_seed)
    : config_(config),
      agent_spec_(agent),
      mixer_spec_{config.mixer, agents, state_dim, config.mixing_embed},
      optimizer_(ParameterSet{Tensor({1})}, config.lr > 0 ? config.lr : 1.0),
      replay_(config.replay_capacity) {
  if (agent_spec_.hidden != config_.hidden) agent_spec_.hidden = config_.hidden;
  if (agents == 0) throw ContractError("learner: no agents");
  if (!(config_.gamma >= 0.0 && config_.gamma <= 1.0)) {
    throw ContractError("learner: gamma must be in [0, 1]");
  }
  if (!(config_.lr > 0.0)) throw ContractError("learner: learning rate must be positive");
  if (config_.batch_episodes == 0 || config_.target_period == 0) {
    throw ContractError("learner: batch size and target period must be positive");
  }
  if (!(config_.eps_end >= 0.0 && config_.eps_end <= config_.eps_start && config_.eps_start <= 1.0)) {
    throw ContractError("learner: need 0 <= eps_end <= eps_start <= 1");
  }
  Rng rng(init_seed);
  agent_ = AgentNetParams::random(agent_spec_, rng);
  mixer_ = MixerParams::random(mixer_spec_, rng);
  target_agent_ = agent_;
  target_mixer_ = mixer_;
  optimizer_ = nk::Adam(online_flat(), config_.lr);
  begin_episode();
}

ParameterSet QmixLearner::online_flat() const {
  if (mixer_spec_.kind == MixerKind::kVdn) return agent_.flatten();
  return concat(agent_.flatten(), mixer_.flatten());
}

void QmixLearner::set_online_flat(const ParameterSet& flat) {
  agent_ = AgentNetParams::unflatten(flat, 0);
  if (mixer_spec_.kind == MixerKind::kQmix) {
    mixer_ = MixerParams::unflatten(flat, AgentNetParams::kTensorCount);
  }
}

void QmixLearner::set_parameters(AgentNetParams agent, MixerParams mixer) {
  const ParameterSet old_a = agent_.flatten();
  const ParameterSet new_a = agent.flatten();
  for (std::size_t i = 0; i < old_a.size(); ++i) nk::require_same_shape(old_a[i], new_a[i], "set_parameters");
  const ParameterSet old_m = mixer_.flatten();
  const ParameterSet new_m = mixer.flatten();
  for (std::size_t i = 0; i < old_m.size(); ++i) nk::require_same_shape(old_m[i], new_m[i], "set_parameters");
  agent_ = std::move(agent);
  mixer_ = std::move(mixer);
}

void QmixLearner::begin_episode() {
  hidden_ = Tensor({mixer_spec_.agents, agent_spec_.hidden}, 0.0);
}

double QmixLearner::epsilon() const {
  if (config_.eps_decay_steps == 0) return config_.eps_end;
  const double frac = std::min(1.0, static_cast<double>(train_steps_) /
                                        static_cast<double>(config_.eps_decay_steps));
  return config_.eps_start + frac * (config_.eps_end - config_.eps_start);
}

Selection QmixLearner::select_actions(const Tensor& obs, std::span<const std::vector<bool>> masks,
                                      bool explore, Rng& rng) {
  const std::size_t n = mixer_spec_.agents, a = agent_spec_.actions;
  if (obs.rank() != 2 || obs.shape()[0] != n || obs.shape()[1] != agent_spec_.obs_dim) {
    throw ContractError("select_actions: observations must be [" + std::to_string(n) + " x " +
                        std::to_string(agent_spec_.obs_dim) + "], got " +
                        nk::shape_string(obs.shape()));
  }
  if (masks.size() != n) throw ContractError("select_actions: one mask per agent required");
  for (const auto& m : masks) {
    if (m.size() != a) throw ContractError("select_actions: mask width mismatch");
    if (std::none_of(m.begin(), m.end(), [](bool b) { return b; })) {
      throw ContractError("select_actions: agent with no feasible action");
    }
  }
  auto [q, h] = agent_q(agent_, obs, hidden_);
  hidden_ = std::move(h);
  const double eps = epsilon();
  Selection sel;
  sel.actions.resize(n);
  sel.chosen_q.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t act = masked_argmax(q.data() + i * a, a, masks[i]);
    if (explore && uniform01(rng) < eps) {
      std::vector<std::size_t> allowed;
      for (std::size_t j = 0; j < a; ++j) {
        if (masks[i][j]) allowed.push_back(j);
      }
      act = allowed[uniform_index(rng, allowed.size())];
    }
    sel.actions[i] = act;
    sel.chosen_q[i] = q[i * a + act];
  }
  sel.q_values = std::move(q);
  return sel;
}

void QmixLearner::sync_target() {
  target_agent_ = agent_;
  target_mixer_ = mixer_;
}

double QmixLearner::train_step(Rng& rng) {
  const auto batch = replay_.sample(config_.batch_episodes, rng);
  std::vector<Window> windows;
  windows.reserve(batch.size());
  for (const Episode* e : batch) {
    const std::size_t t = e->steps();
    const std::size_t len = config_.window > 0 ? std::min(config_.window, t) : t;
    const std::size_t start = t > len ? uniform_index(rng, t - len + 1) : 0;
    windows.push_back({e, start, len});
  }
  return train_windows(windows);
}

double QmixLearner::train_on(std::span<const Episode* const> batch, Rng&) {
  std::vector<Window> windows;
  for (const Episode* e : batch) windows.push_back({e, 0, e->steps()});
  return train_windows(windows);
}

double QmixLearner::train_windows(const std::vector<Window>& windows) {
  if (windows.empty()) throw ContractError("train_step: empty batch");
  const std::size_t n = mixer_spec_.agents, a = agent_spec_.actions;
  const std::size_t obs_dim = agent_spec_.obs_dim, hid = agent_spec_.hidden;
  const std::size_t sdim = mixer_spec_.state_dim;
  const std::size_t b = windows.size();
  std::size_t horizon = 0;
  for (const Window& w : windows) {
    w.episode->validate(a);
    if (w.episode->agents() != n) throw ContractError("train_step: episode agent count mismatch");
    if (w.episode->states.front().size() != sdim) {
      throw ContractError("train_step: episode state width mismatch");
    }
    horizon = std::max(horizon, w.length);
  }

  // Row layout per time step: window-major, then agent.
  auto obs_at = [&](std::size_t tau) {
    Tensor x({b * n, obs_dim}, 0.0);
    for (std::size_t w = 0; w < b; ++w) {
      if (tau > windows[w].length) continue;
      const Tensor& o = windows[w].episode->obs[windows[w].start + tau];
      std::copy(o.values().begin(), o.values().end(), x.data() + w * n * obs_dim);
    }
    return x;
  };

  // Targets from the frozen networks: masked max at t+1, mixed (or summed).
  Tensor next_max({horizon * b, n}, 0.0);
  {
    Tensor h({b * n, hid}, 0.0);
    for (std::size_t tau = 0; tau <= horizon; ++tau) {
      auto [q, h_next] = agent_q(target_agent_, obs_at(tau), h);
      h = std::move(h_next);
      if (tau == 0) continue;
      for (std::size_t w = 0; w < b; ++w) {
        if (tau > windows[w].length) continue;
        const auto& mask = windows[w].episode->masks[windows[w].start + tau];
        for (std::size_t i = 0; i < n; ++i) {
          double best = -std::numeric_limits<double>::infinity();
          for (std::size_t j = 0; j < a; ++j) {
            if (mask[i * a + j]) best = std::max(best, q[(w * n + i) * a + j]);
          }
          next_max[((tau - 1) * b + w) * n + i] = std::isfinite(best) ? best : 0.0;
        }
      }
    }
  }
  Tensor next_state({horizon * b, sdim}, 0.0);
  Tensor cur_state({horizon * b, sdim}, 0.0);
  Tensor valid({horizon * b, 1}, 0.0);
  std::vector<double> reward(horizon * b, 0.0);
  std::vector<bool> terminal(horizon * b, false);
  std::vector<std::vector<std::size_t>> chosen(horizon, std::vector<std::size_t>(b * n, 0));
  for (std::size_t tau = 0; tau < horizon; ++tau) {
    for (std::size_t w = 0; w < b; ++w) {
      const Window& win = windows[w];
      if (tau >= win.length) continue;
      const std::size_t t = win.start + tau;
      const std::size_t row = tau * b + w;
      valid[row] = 1.0;
      reward[row] = win.episode->rewards[t];
      terminal[row] = t + 1 == win.episode->steps();
      const Tensor& s0 = win.episode->states[t];
      const Tensor& s1 = win.episode->states[t + 1];
      std::copy(s0.values().begin(), s0.values().end(), cur_state.data() + row * sdim);
      std::copy(s1.values().begin(), s1.values().end(), next_state.data() + row * sdim);
      for (std::size_t i = 0; i < n; ++i) chosen[tau][w * n + i] = win.episode->actions[t][i];
    }
  }
  const std::vector<double> next_tot = mix_values(next_max, next_state, target_mixer_, mixer_spec_);
  Tensor target({horizon * b, 1});
  double valid_count = 0.0;
  for (std::size_t row = 0; row < horizon * b; ++row) {
    target[row] = reward[row] + (terminal[row] ? 0.0 : config_.gamma * next_tot[row]);
    valid_count += valid[row];
  }

  nk::Tape tape;
  const AgentNetVars agent_vars = bind(tape, agent_, true);
  MixerVars mixer_vars;
  if (mixer_spec_.kind == MixerKind::kQmix) mixer_vars = bind(tape, mixer_, true);
  Var h = tape.constant(Tensor({b * n, hid}, 0.0));
  std::vector<Var> per_step;
  per_step.reserve(horizon);
  for (std::size_t tau = 0; tau < horizon; ++tau) {
    const AgentStep step = agent_forward(tape.constant(obs_at(tau)), h, agent_vars);
    h = step.hidden;
    per_step.push_back(nk::reshape(nk::gather_cols(step.q, chosen[tau]), {b, n}));
  }
  Var q_tot = mix(nk::concat_rows(per_step), tape.constant(std::move(cur_state)), &mixer_vars,
                  mixer_spec_);
  Var err = nk::mul(nk::square(nk::sub(q_tot, tape.constant(std::move(target)))),
                    tape.constant(std::move(valid)));
  Var loss = nk::scale(nk::sum(err), 1.0 / valid_count);
  tape.backward(loss);

  ParameterSet grads;
  for (const Var& v : agent_vars.list()) grads.push_back(v.grad());
  if (mixer_spec_.kind == MixerKind::kQmix) {
    for (const Var& v : mixer_vars.list()) grads.push_back(v.grad());
  }
  if (config_.grad_clip > 0.0) nk::clip_grad_norm(grads, config_.grad_clip);
  ParameterSet params = online_flat();
  optimizer_.step(params, grads);
  set_online_flat(params);

  ++train_steps_;
  if (train_steps_ % config_.target_period == 0) sync_target();
  return loss.value()[0];
}

namespace {
constexpr std::string_view kLearnerMagic = "DRFLQMX1";
constexpr std::uint32_t kLearnerVersion = 1;
}  // namespace

void QmixLearner::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  nk::io::write_magic(os, kLearnerMagic);
  nk::io::write_u32(os, kLearnerVersion);
  for (std::size_t v : {mixer_spec_.agents, agent_spec_.obs_dim, agent_spec_.actions,
                        agent_spec_.hidden, mixer_spec_.state_dim, mixer_spec_.embed}) {
    nk::io::write_u32(os, static_cast<std::uint32_t>(v));
  }
  nk::io::write_u32(os, mixer_spec_.kind == MixerKind::kQmix ? 0u : 1u);
  nk::io::write_f64(os, config_.gamma);
  nk::io::write_f64(os, epsilon());
  nk::io::write_u64(os, train_steps_);
  nk::io::write_tensors(os, agent_.flatten());
  nk::io::write_tensors(os, mixer_.flatten());
  nk::io::write_tensors(os, target_agent_.flatten());
  nk::io::write_tensors(os, target_mixer_.flatten());
  if (!os) throw std::runtime_error("write failed: " + path);
}

void QmixLearner::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  nk::io::expect_magic(is, kLearnerMagic);
  if (nk::io::read_u32(is) != kLearnerVersion) {
    throw std::runtime_error(path + ": unsupported learner checkpoint version");
  }
  const std::size_t expect[] = {mixer_spec_.agents, agent_spec_.obs_dim, agent_spec_.actions,
                                agent_spec_.hidden, mixer_spec_.state_dim, mixer_spec_.embed};
  for (std::size_t v : expect) {
    if (nk::io::read_u32(is) != v) throw std::runtime_error(path + ": learner layout mismatch");
  }
  const std::uint32_t kind = nk::io::read_u32(is);
  if ((kind == 0) != (mixer_spec_.kind == MixerKind::kQmix)) {
    throw std::runtime_error(path + ": mixer kind mismatch");
  }
  nk::io::read_f64(is);  // gamma, informational
  nk::io::read_f64(is);  // epsilon, derived from train steps
  train_steps_ = nk::io::read_u64(is);
  agent_ = AgentNetParams::unflatten(nk::io::read_tensors(is, AgentNetParams::kTensorCount));
  mixer_ = MixerParams::unflatten(nk::io::read_tensors(is, MixerParams::kTensorCount));
  target_agent_ = AgentNetParams::unflatten(nk::io::read_tensors(is, AgentNetParams::kTensorCount));
  target_mixer_ = MixerParams::unflatten(nk::io::read_tensors(is, MixerParams::kTensorCount));
  optimizer_ = nk::Adam(online_flat(), config_.lr);
}

Selection select_actions(QmixLearner& learner, const Tensor& obs,
                         std::span<const std::vector<bool>> masks, bool explore, Rng& rng) {
  return learner.select_actions(obs, masks, explore, rng);
}

void sync_target(QmixLearner& learner) { learner.sync_target(); }

}  // namespace drfl::marl
