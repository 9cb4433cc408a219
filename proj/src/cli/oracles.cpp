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

#include "drfl/cli/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include "drfl/errors.hpp"
#include "drfl/marl/qmix_learner.hpp"
#include "drfl/numkernel/gradcheck.hpp"
#include "drfl/numkernel/gru.hpp"
#include "drfl/orchestrator/experiment.hpp"
#include "drfl/taskmodel/training.hpp"

namespace drfl::cli {

namespace nk = numkernel;
using nk::Tensor;
using nk::Var;

namespace {

Tensor random_tensor(nk::Shape shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = scale * (2.0 * uniform01(rng) - 1.0);
  return t;
}

// Contracting with fixed random weights keeps every output entry in play.
Var project(nk::Tape& tape, Var out, const Tensor& weights) {
  return nk::sum(nk::mul(out, tape.constant(weights)));
}

double check_dense(Rng& rng) {
  const std::size_t b = 1 + uniform_index(rng, 4), in = 1 + uniform_index(rng, 5),
                    out = 1 + uniform_index(rng, 5);
  const Tensor x = random_tensor({b, in}, rng);
  const Tensor c = random_tensor({b, out}, rng);
  const nk::ParameterSet params{random_tensor({in, out}, rng), random_tensor({out}, rng)};
  return nk::grad_check(params, [&](nk::Tape& tape, std::span<const Var> p) {
           Var y = nk::dense(tape.constant(x), p[0], p[1]);
           return nk::add(project(tape, nk::tanh(y), c), nk::scale(nk::sum(nk::square(y)), 0.5));
         }).max_rel_error;
}

double check_gru(Rng& rng) {
  const std::size_t b = 1 + uniform_index(rng, 3), in = 1 + uniform_index(rng, 4),
                    hid = 1 + uniform_index(rng, 4);
  const nk::GruCellParams cell = nk::GruCellParams::random(in, hid, rng);
  nk::ParameterSet params = cell.flatten();
  params.push_back(random_tensor({b, in}, rng));   // x
  params.push_back(random_tensor({b, hid}, rng));  // h
  const Tensor c = random_tensor({b, hid}, rng);
  return nk::grad_check(params, [&](nk::Tape& tape, std::span<const Var> p) {
           const nk::GruCellVars v{p[0], p[1], p[2], p[3], p[4], p[5],
                                   p[6], p[7], p[8], p[9], p[10], p[11]};
           return project(tape, nk::gru_step(p[12], p[13], v), c);
         }).max_rel_error;
}

double check_softmax_ce(Rng& rng) {
  const std::size_t b = 1 + uniform_index(rng, 5), in = 1 + uniform_index(rng, 4),
                    k = 2 + uniform_index(rng, 5);
  const Tensor x = random_tensor({b, in}, rng, 2.0);
  std::vector<int> labels(b);
  for (int& l : labels) l = static_cast<int>(uniform_index(rng, k));
  const nk::ParameterSet params{random_tensor({in, k}, rng, 2.0), random_tensor({k}, rng)};
  return nk::grad_check(params, [&](nk::Tape& tape, std::span<const Var> p) {
           return nk::softmax_cross_entropy(nk::dense(tape.constant(x), p[0], p[1]), labels);
         }).max_rel_error;
}

double check_mixer(Rng& rng) {
  marl::MixerSpec spec;
  spec.kind = marl::MixerKind::kQmix;
  spec.agents = 1 + uniform_index(rng, 4);
  spec.state_dim = 1 + uniform_index(rng, 4);
  spec.embed = 1 + uniform_index(rng, 4);
  const std::size_t b = 1 + uniform_index(rng, 3);
  const Tensor state = random_tensor({b, spec.state_dim}, rng);
  const Tensor c = random_tensor({b, 1}, rng);
  nk::ParameterSet params = marl::MixerParams::random(spec, rng).flatten();
  params.push_back(random_tensor({b, spec.agents}, rng));  // agent Q values
  return nk::grad_check(params, [&](nk::Tape& tape, std::span<const Var> p) {
           const marl::MixerVars v{p[0], p[1], p[2], p[3], p[4], p[5], p[6], p[7], p[8], p[9]};
           return project(tape, marl::mix(p[10], tape.constant(state), &v, spec), c);
         }).max_rel_error;
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

}  // namespace

std::string_view to_string(GradFamily f) {
  switch (f) {
    case GradFamily::kDense: return "dense";
    case GradFamily::kGru: return "gru";
    case GradFamily::kSoftmaxCe: return "softmax-ce";
    case GradFamily::kMixer: return "mixer";
  }
  return "?";
}

double grad_family_max_error(GradFamily family, std::size_t instances, std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (std::size_t i = 0; i < instances; ++i) {
    double e = 0.0;
    switch (family) {
      case GradFamily::kDense: e = check_dense(rng); break;
      case GradFamily::kGru: e = check_gru(rng); break;
      case GradFamily::kSoftmaxCe: e = check_softmax_ce(rng); break;
      case GradFamily::kMixer: e = check_mixer(rng); break;
    }
    worst = std::max(worst, e);
  }
  return worst;
}

double fedavg_max_deviation(std::size_t rounds, std::uint64_t seed) {
  orchestrator::ExperimentConfig cfg;
  cfg.devices.counts = {0, 6, 0};
  cfg.devices.battery_j = 1e12;
  cfg.data.samples = 900;
  cfg.data.alpha = 1.0;
  cfg.data.validation_fraction = 0.1;
  cfg.scheduler.kind = orchestrator::SchedulerKind::kStatic;
  cfg.scheduler.participation = 1.0;
  cfg.scheduler.static_depths = {cfg.model.depth, cfg.model.depth, cfg.model.depth};
  cfg.run.seed = seed;
  cfg.run.max_rounds = rounds;
  cfg.run.train.epochs = 2;

  orchestrator::Experiment exp(cfg);
  std::vector<taskmodel::LayerwiseModel> trajectory;
  orchestrator::RunHooks hooks;
  hooks.on_trace = [&](const orchestrator::RoundTrace& t) { trajectory.push_back(*t.after); };
  exp.run(hooks);
  if (trajectory.size() != rounds) throw InvariantError("fedavg oracle: run stopped early");

  const orchestrator::World& world = exp.world();
  const std::size_t depth = cfg.model.depth;
  auto oracle = std::make_shared<taskmodel::LayerwiseModel>(exp.initial_model());
  double worst = 0.0;
  for (std::size_t t = 1; t <= rounds; ++t) {
    const auto snapshot = std::make_shared<const taskmodel::LayerwiseModel>(*oracle);
    double total = 0.0;
    for (const auto& p : world.profiles) total += static_cast<double>(p.shard_size);
    for (std::size_t id = 0; id < world.size(); ++id) {
      const taskmodel::GradientUpdate u = taskmodel::local_train(
          taskmodel::extract_submodel(snapshot, depth), world.shards[id], cfg.run.train,
          exp.seeds().derive("local-train", 0, t, id), id);
      const double w = static_cast<double>(world.profiles[id].shard_size) / total;
      const std::vector<std::size_t> idx = snapshot->submodel_indices(depth);
      for (std::size_t k = 0; k < idx.size(); ++k) {
        Tensor& dst = oracle->tensors()[idx[k]];
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] -= w * u.deltas[k][i];
      }
    }
    const auto& run = trajectory[t - 1].tensors();
    for (std::size_t k = 0; k < run.size(); ++k) {
      for (std::size_t i = 0; i < run[k].size(); ++i) {
        worst = std::max(worst, std::abs(run[k][i] - oracle->tensors()[k][i]));
      }
    }
  }
  return worst;
}

MatrixGameResult matrix_game(marl::MixerKind mixer, std::size_t train_steps,
                             std::size_t eval_episodes, std::uint64_t seed) {
  constexpr std::size_t kAgents = 2, kActions = 2;
  marl::LearnerConfig cfg;
  cfg.mixer = mixer;
  cfg.hidden = 16;
  cfg.mixing_embed = 8;
  cfg.gamma = 0.0;
  cfg.lr = 2e-3;
  cfg.replay_capacity = 500;
  cfg.batch_episodes = 32;
  cfg.target_period = 50;
  cfg.eps_start = 1.0;
  cfg.eps_end = 0.1;
  cfg.eps_decay_steps = train_steps / 2;
  marl::QmixLearner learner({2, cfg.hidden, kActions}, kAgents, 1, cfg, seed);

  const Tensor obs({kAgents, 2}, std::vector<double>{1.0, 0.0, 0.0, 1.0});
  const Tensor state({1}, 1.0);
  const std::vector<std::vector<bool>> masks(kAgents, std::vector<bool>(kActions, true));
  const std::vector<std::uint8_t> flat(kAgents * kActions, 1);
  auto payoff = [](const std::vector<std::size_t>& a) { return a[0] == 1 && a[1] == 1 ? 8.0 : 0.0; };

  Rng rng(splitmix64(seed ^ 0x6d67ULL));
  auto play = [&](bool explore) {
    learner.begin_episode();
    return learner.select_actions(obs, masks, explore, rng).actions;
  };
  while (learner.train_steps() < train_steps) {
    const auto actions = play(true);
    marl::EpisodeBuilder b(obs, flat, state);
    b.add_step(actions, payoff(actions), obs, flat, state);
    learner.replay().add(std::move(b).finish());
    if (learner.replay().size() >= cfg.batch_episodes) learner.train_step(rng);
  }
  std::size_t hits = 0;
  for (std::size_t e = 0; e < eval_episodes; ++e) {
    const auto a = play(false);
    if (a[0] == 1 && a[1] == 1) ++hits;
  }
  return {static_cast<double>(hits) / static_cast<double>(eval_episodes), learner.train_steps()};
}

std::vector<OracleResult> run_oracles(std::string_view which) {
  const bool all = which == "all";
  if (!all && which != "fedavg" && which != "gradcheck" && which != "matrix-game") {
    throw ContractError("unknown oracle: " + std::string(which));
  }
  std::vector<OracleResult> out;
  if (all || which == "fedavg") {
    const double d = fedavg_max_deviation(10, 7);
    out.push_back({"fedavg", d < 1e-12, d, 1e-12, "max |aggregated - sequential FedAvg|"});
  }
  if (all || which == "gradcheck") {
    for (GradFamily f : {GradFamily::kDense, GradFamily::kGru, GradFamily::kSoftmaxCe,
                         GradFamily::kMixer}) {
      const double e = grad_family_max_error(f, 50, 11 + static_cast<std::uint64_t>(f));
      out.push_back({"gradcheck/" + std::string(to_string(f)), e < 1e-4, e, 1e-4,
                     "max relative error over 50 instances"});
    }
  }
  if (all || which == "matrix-game") {
    for (marl::MixerKind k : {marl::MixerKind::kQmix, marl::MixerKind::kVdn}) {
      const MatrixGameResult r = matrix_game(k, 3000, 1000, 5);
      out.push_back({"matrix-game/" + std::string(marl::to_string(k)), r.optimal_rate >= 0.95,
                     r.optimal_rate, 0.95,
                     "optimal joint action rate after " + std::to_string(r.train_steps) + " steps"});
    }
  }
  for (auto& r : out) {
    if (r.detail.empty()) r.detail = fmt_double(r.observed);
  }
  return out;
}

}  // namespace drfl::cli
