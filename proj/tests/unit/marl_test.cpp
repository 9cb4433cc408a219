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

#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "drfl/errors.hpp"
#include "drfl/marl/dual_selection.hpp"
#include "drfl/marl/networks.hpp"
#include "drfl/marl/qmix_learner.hpp"
#include "drfl/marl/replay_buffer.hpp"

using namespace drfl;
using namespace drfl::marl;

namespace {

Tensor random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Tensor t({r, c});
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = 2.0 * uniform01(rng) - 1.0;
  return t;
}

Episode toy_episode(std::size_t steps, double reward, std::size_t agents = 2) {
  const std::size_t a = 3;
  EpisodeBuilder b(Tensor({agents, 4}, 0.0), std::vector<std::uint8_t>(agents * a, 1),
                   Tensor({5}, 0.0));
  for (std::size_t t = 0; t < steps; ++t) {
    b.add_step(std::vector<std::size_t>(agents, t % a), reward, Tensor({agents, 4}, 0.1 * t),
               std::vector<std::uint8_t>(agents * a, 1), Tensor({5}, 0.1 * t));
  }
  return std::move(b).finish();
}

LearnerConfig small_config() {
  LearnerConfig c;
  c.hidden = 8;
  c.mixing_embed = 4;
  c.batch_episodes = 2;
  c.eps_start = 1.0;
  c.eps_end = 0.1;
  c.eps_decay_steps = 10;
  c.target_period = 3;
  c.gamma = 0.9;
  c.lr = 1e-2;
  return c;
}

}  // namespace

TEST_CASE("QMIX mixer is monotone in every agent's Q") {
  Rng rng(1);
  const MixerSpec spec{MixerKind::kQmix, 3, 5, 4};
  for (int trial = 0; trial < 20; ++trial) {
    const MixerParams p = MixerParams::random(spec, rng);
    const Tensor q = random_matrix(1, 3, rng), s = random_matrix(1, 5, rng);
    const double base = mix_values(q, s, p, spec)[0];
    for (std::size_t n = 0; n < 3; ++n) {
      Tensor q2 = q;
      q2[n] += 0.1;
      CHECK(mix_values(q2, s, p, spec)[0] >= base);
    }
  }
}

TEST_CASE("tape mixer matches the tape-free mixer") {
  Rng rng(2);
  const MixerSpec spec{MixerKind::kQmix, 3, 5, 4};
  const MixerParams p = MixerParams::random(spec, rng);
  const Tensor q = random_matrix(4, 3, rng), s = random_matrix(4, 5, rng);
  numkernel::Tape tape;
  const MixerVars v = bind(tape, p, false);
  const Var out = mix(tape.constant(q), tape.constant(s), &v, spec);
  const auto ref = mix_values(q, s, p, spec);
  for (std::size_t r = 0; r < 4; ++r) CHECK(out.value()[r] == doctest::Approx(ref[r]));
}

TEST_CASE("VDN mixer is the plain sum") {
  const MixerSpec spec{MixerKind::kVdn, 3, 2, 4};
  const Tensor q = Tensor::matrix({{1.0, -2.0, 0.5}});
  CHECK(mix_values(q, Tensor({1, 2}), MixerParams{}, spec)[0] == doctest::Approx(-0.5));
}

TEST_CASE("agent network tape and tape-free forward agree") {
  Rng rng(3);
  const AgentNetSpec spec{6, 8, 3};
  const auto p = AgentNetParams::random(spec, rng);
  const Tensor obs = random_matrix(2, 6, rng), h = random_matrix(2, 8, rng);
  numkernel::Tape tape;
  const auto vars = bind(tape, p, false);
  const auto step = agent_forward(tape.constant(obs), tape.constant(h), vars);
  const auto [q, h2] = agent_q(p, obs, h);
  CHECK(step.q.value() == q);
  CHECK(step.hidden.value() == h2);
  CHECK(p.spec().hidden == 8);
  CHECK(AgentNetParams::unflatten(p.flatten()).flatten() == p.flatten());
}

TEST_CASE("replay buffer evicts the oldest episode") {
  ReplayBuffer rb(2);
  rb.add(toy_episode(1, 1.0));
  rb.add(toy_episode(1, 2.0));
  rb.add(toy_episode(1, 3.0));
  CHECK(rb.size() == 2);
  CHECK(rb.total_added() == 3);
  CHECK(rb.at(0).rewards[0] == 2.0);
  Rng rng(1);
  CHECK(rb.sample(5, rng).size() == 5);
  CHECK_THROWS_AS(ReplayBuffer(0), ContractError);
}

TEST_CASE("episodes validate their array lengths") {
  Episode e = toy_episode(3, 0.0);
  CHECK(e.steps() == 3);
  CHECK(e.obs.size() == 4);
  CHECK_NOTHROW(e.validate(3));
  e.rewards.push_back(0.0);
  CHECK_THROWS_AS(e.validate(3), ContractError);
}

TEST_CASE("greedy selection is the masked argmax") {
  QmixLearner learner({4, 8, 3}, 2, 5, small_config(), 7);
  learner.begin_episode();
  const Tensor obs({2, 4}, 0.3);
  const std::vector<std::vector<bool>> masks{{false, false, true}, {true, true, true}};
  Rng rng(1);
  const auto sel = learner.select_actions(obs, masks, false, rng);
  CHECK(sel.actions[0] == 2);
  std::size_t best = 0;
  for (std::size_t a = 1; a < 3; ++a) {
    if (sel.q_values.at(1, a) > sel.q_values.at(1, best)) best = a;
  }
  CHECK(sel.actions[1] == best);
  CHECK(sel.chosen_q[1] == sel.q_values.at(1, best));
  CHECK_FALSE(learner.acting_hidden() == Tensor({2, 8}, 0.0));
}

TEST_CASE("exploration only picks allowed actions") {
  QmixLearner learner({4, 8, 3}, 2, 5, small_config(), 7);
  const std::vector<std::vector<bool>> masks{{true, false, true}, {false, true, false}};
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    learner.begin_episode();
    const auto sel = learner.select_actions(Tensor({2, 4}, 0.0), masks, true, rng);
    CHECK(sel.actions[0] != 1);
    CHECK(sel.actions[1] == 1);
  }
}

TEST_CASE("epsilon decays linearly with training steps") {
  QmixLearner learner({4, 8, 3}, 2, 5, small_config(), 7);
  CHECK(learner.epsilon() == doctest::Approx(1.0));
  learner.replay().add(toy_episode(4, 1.0));
  Rng rng(2);
  for (int i = 0; i < 5; ++i) learner.train_step(rng);
  CHECK(learner.epsilon() == doctest::Approx(0.55));
  for (int i = 0; i < 10; ++i) learner.train_step(rng);
  CHECK(learner.epsilon() == doctest::Approx(0.1));
}

TEST_CASE("target network syncs on schedule") {
  QmixLearner learner({4, 8, 3}, 2, 5, small_config(), 7);
  learner.replay().add(toy_episode(4, 1.0));
  Rng rng(2);
  learner.train_step(rng);
  CHECK_FALSE(learner.agent_params().flatten() == learner.target_agent_params().flatten());
  learner.train_step(rng);
  learner.train_step(rng);
  CHECK(learner.agent_params().flatten() == learner.target_agent_params().flatten());
  CHECK(learner.mixer_params().flatten() == learner.target_mixer_params().flatten());
}

TEST_CASE("training fits a constant reward") {
  LearnerConfig c = small_config();
  c.gamma = 0.0;
  QmixLearner learner({4, 8, 3}, 2, 5, c, 7);
  learner.replay().add(toy_episode(3, 2.0));
  Rng rng(3);
  const double first = learner.train_step(rng);
  double last = first;
  for (int i = 0; i < 300; ++i) last = learner.train_step(rng);
  CHECK(last < 0.01 * first);
}

TEST_CASE("learner checkpoints round-trip") {
  QmixLearner a({4, 8, 3}, 2, 5, small_config(), 7);
  a.replay().add(toy_episode(3, 1.0));
  Rng rng(3);
  a.train_step(rng);
  const auto path = std::filesystem::temp_directory_path() / "drfl_learner_test.bin";
  a.save(path.string());
  QmixLearner b({4, 8, 3}, 2, 5, small_config(), 99);
  b.load(path.string());
  CHECK(b.agent_params().flatten() == a.agent_params().flatten());
  CHECK(b.target_mixer_params().flatten() == a.target_mixer_params().flatten());
  CHECK(b.train_steps() == 1);
  QmixLearner wrong({4, 8, 3}, 3, 5, small_config(), 1);
  CHECK_THROWS(wrong.load(path.string()));
  std::filesystem::remove(path);
}

TEST_CASE("observations encode features and the previous action") {
  const AgentObservation o{0.5, 0.25, 1.0, 0.0, 2};
  std::vector<double> out(AgentObservation::width(3));
  o.write(out, 3);
  CHECK(out == std::vector<double>{0.5, 0.25, 1.0, 0.0, 0.0, 0.0, 1.0});
  CHECK_THROWS_AS(AgentObservation({1.5, 0, 0, 0, 0}).validate(3), ContractError);
  CHECK_THROWS_AS(AgentObservation({0, 0, 0, 0, 3}).validate(3), ContractError);
  const std::vector<AgentObservation> two{o, o};
  CHECK(stack_observations(two, 3).shape() == numkernel::Shape{2, 7});
}

TEST_CASE("top-k drops skips and orders by q with id tie-break") {
  const std::vector<AgentChoice> c{{0, 1, 3.0}, {1, 4, 9.0}, {2, 0, 5.0}, {3, 2, 5.0}, {4, 3, 1.0}};
  CHECK(topk_select(c, 2, 4) == std::vector<std::size_t>{2, 3});
  CHECK(topk_select(c, 10, 4) == std::vector<std::size_t>{2, 3, 0, 4});
  CHECK(topk_select(c, 0, 4).empty());
  const std::vector<AgentChoice> dup{{0, 1, 3.0}, {0, 1, 2.0}};
  CHECK_THROWS_AS(topk_select(dup, 1, 4), ContractError);
}

TEST_CASE("reward combines accuracy, energy and time") {
  const RewardWeights w{1000.0, 0.01, 1.0};
  CHECK(compute_reward(0.8, 0.7, 1000.0, 900.0, 5.0, w) == doctest::Approx(100.0 - 1.0 - 5.0));
  CHECK(compute_reward(0.5, 0.5, 10.0, 10.0, 0.0, w) == 0.0);
  CHECK_THROWS_AS(compute_reward(NAN, 0.5, 10.0, 10.0, 0.0, w), ContractError);
  CHECK_THROWS_AS(compute_reward(0.5, 0.5, 10.0, 10.0, -1.0, w), ContractError);
}
