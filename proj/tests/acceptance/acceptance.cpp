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

// Acceptance gate: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "drfl/cli/config_io.hpp"
#include "drfl/cli/oracles.hpp"
#include "drfl/datagen/partition.hpp"
#include "drfl/marl/networks.hpp"
#include "drfl/orchestrator/experiment.hpp"
#include "drfl/taskmodel/training.hpp"

namespace {

using namespace drfl;
using numkernel::Tensor;
using orchestrator::ExperimentConfig;
using orchestrator::SchedulerKind;
namespace fs = std::filesystem;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

// Gradient correctness over four parameter families.
Verdict gradients() {
  constexpr std::size_t kInstances = 50;
  double worst = 0.0;
  std::string parts;
  for (auto f : {cli::GradFamily::kDense, cli::GradFamily::kGru, cli::GradFamily::kSoftmaxCe,
                 cli::GradFamily::kMixer}) {
    const double e = cli::grad_family_max_error(f, kInstances, 100 + static_cast<std::uint64_t>(f));
    worst = std::max(worst, e);
    parts += std::string(cli::to_string(f)) + "=" + fmt(e, 3) + " ";
  }
  return {worst < 1e-4, parts + "(max rel error over 50 instances each, limit 1e-4)"};
}

Verdict fedavg() {
  const double d = cli::fedavg_max_deviation(10, 3);
  return {d <= 1e-12, "max |run - sequential oracle| = " + fmt(d, 3) + " over 10 rounds, limit 1e-12"};
}

// Random depth assignments against the coverage law.
Verdict coverage() {
  Rng rng(2024);
  const taskmodel::ModelSpec spec{4, 16, 8, 12, 5};
  std::size_t violations = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto global = taskmodel::LayerwiseModel::initialize(spec, rng);
    std::vector<taskmodel::GradientUpdate> updates;
    const std::size_t n = uniform_index(rng, 6);
    for (std::size_t id = 0; id < n; ++id) {
      taskmodel::GradientUpdate u;
      u.device = id;
      u.depth = 1 + uniform_index(rng, spec.depth);
      u.sample_count = 1 + uniform_index(rng, 100);
      for (std::size_t i : global.submodel_indices(u.depth)) {
        Tensor d(global.tensors()[i].shape());
        for (std::size_t k = 0; k < d.size(); ++k) d[k] = 2.0 * uniform01(rng) - 1.0;
        u.deltas.push_back(std::move(d));
      }
      updates.push_back(std::move(u));
    }
    shuffle(updates.begin(), updates.end(), rng);
    const auto next = taskmodel::aggregate_layerwise(global, updates);
    for (std::size_t gi = 0; gi < global.tensors().size(); ++gi) {
      // Contributors and the position of this tensor inside their view.
      std::vector<std::pair<const taskmodel::GradientUpdate*, std::size_t>> contrib;
      for (const auto& u : updates) {
        const auto idx = global.submodel_indices(u.depth);
        const auto it = std::find(idx.begin(), idx.end(), gi);
        if (it != idx.end()) contrib.emplace_back(&u, static_cast<std::size_t>(it - idx.begin()));
      }
      const Tensor& before = global.tensors()[gi];
      const Tensor& after = next.tensors()[gi];
      if (contrib.empty()) {
        if (!(before == after)) ++violations;
        continue;
      }
      double total = 0.0;
      for (const auto& [u, k] : contrib) total += static_cast<double>(u->sample_count);
      for (std::size_t j = 0; j < before.size(); ++j) {
        const double applied = before[j] - after[j];
        double expect = 0.0, lo = INFINITY, hi = -INFINITY;
        for (const auto& [u, k] : contrib) {
          const double d = u->deltas[k][j];
          expect += static_cast<double>(u->sample_count) / total * d;
          lo = std::min(lo, d);
          hi = std::max(hi, d);
        }
        worst = std::max(worst, std::abs(applied - expect));
        if (applied == 0.0 || applied < lo - 1e-12 || applied > hi + 1e-12 ||
            std::abs(applied - expect) > 1e-12) {
          ++violations;
        }
      }
    }
  }
  return {violations == 0, std::to_string(violations) + " violations over 200 assignments, max |applied - convex combination| = " + fmt(worst, 3)};
}

struct LedgerCheck {
  double worst_gap = 0.0;
  double min_remaining = INFINITY;
  std::size_t rounds = 0;

  // Feeds one round; `remaining` holds the per-device balances of the
  // current episode and is reset by the caller.
  void add(const orchestrator::RoundReport& r, std::vector<double>& remaining, double& prev_e_all) {
    long double spent = 0.0L;
    for (std::size_t i = 0; i < remaining.size(); ++i) {
      remaining[i] -= r.energy_spent[i];
      spent += r.energy_spent[i];
      min_remaining = std::min({min_remaining, remaining[i], r.energy_spent[i]});
    }
    worst_gap = std::max(
        worst_gap, static_cast<double>(std::abs(static_cast<long double>(prev_e_all) - r.e_all - spent)));
    prev_e_all = r.e_all;
    ++rounds;
  }
};

// Runs an experiment and checks the ledger of every episode, train and eval.
orchestrator::Summary run_checked(const ExperimentConfig& cfg, LedgerCheck& check) {
  orchestrator::Experiment exp(cfg);
  const double battery = exp.world().battery;
  const std::size_t n = exp.world().size();
  std::vector<double> remaining;
  double prev_e_all = 0.0, initial_e_all = 0.0;
  long double spent_total = 0.0L;
  std::size_t episode = SIZE_MAX;
  orchestrator::RunHooks hooks;
  hooks.on_round = [&](const orchestrator::RoundReport& r) {
    if (r.episode != episode) {
      remaining.assign(n, battery);
      prev_e_all = initial_e_all = battery * static_cast<double>(n);
      spent_total = 0.0L;
      episode = r.episode;
    }
    for (double e : r.energy_spent) spent_total += e;
    check.add(r, remaining, prev_e_all);
  };
  const auto s = exp.run(hooks);
  // Whole-episode balance of the evaluation episode.
  check.worst_gap = std::max(check.worst_gap,
                             std::abs(s.total_energy_spent - (s.initial_e_all - s.final_e_all)));
  if (s.rounds > 0) {
    check.worst_gap = std::max(
        check.worst_gap, static_cast<double>(std::abs(spent_total - (static_cast<long double>(initial_e_all) - prev_e_all))));
  }
  return s;
}

Verdict ledger() {
  LedgerCheck check;
  for (auto kind : {SchedulerKind::kGreedy, SchedulerKind::kRandom, SchedulerKind::kStatic}) {
    ExperimentConfig cfg;
    cfg.scheduler.kind = kind;
    run_checked(cfg, check);
  }
  ExperimentConfig cfg;
  cfg.run.max_rounds = 200;
  cfg.scheduler.kind = SchedulerKind::kGreedy;
  run_checked(cfg, check);
  const bool pass = check.worst_gap <= 1e-9 && check.min_remaining >= 0.0;
  return {pass, "default config, " + std::to_string(check.rounds) +
                    " rounds: max ledger gap " + fmt(check.worst_gap, 3) +
                    " J (limit 1e-9), min balance or spend " + fmt(check.min_remaining, 6) + " J"};
}

Verdict matrix_game() {
  constexpr std::size_t kSteps = 3000;
  std::string detail;
  bool pass = true;
  for (auto k : {marl::MixerKind::kQmix, marl::MixerKind::kVdn}) {
    const auto r = cli::matrix_game(k, kSteps, 1000, 9);
    pass = pass && r.optimal_rate >= 0.95 && r.train_steps <= 20000;
    detail += std::string(marl::to_string(k)) + " optimum rate " + fmt(r.optimal_rate) + " after " +
              std::to_string(r.train_steps) + " steps; ";
  }
  return {pass, detail + "need >= 0.95 within 20000 steps"};
}

Verdict monotone() {
  Rng rng(77);
  const ExperimentConfig cfg;
  const std::size_t n = cfg.devices.total();
  const marl::MixerSpec spec{marl::MixerKind::kQmix, n, orchestrator::global_state_width(n),
                             cfg.marl.learner.mixing_embed};
  std::size_t lowered = 0, checks = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto params = marl::MixerParams::random(spec, rng);
    Tensor q({1, n}), s({1, spec.state_dim});
    for (std::size_t i = 0; i < n; ++i) q[i] = 20.0 * uniform01(rng) - 10.0;
    for (std::size_t i = 0; i < spec.state_dim; ++i) s[i] = uniform01(rng);
    const double base = marl::mix_values(q, s, params, spec)[0];
    for (std::size_t a = 0; a < n; ++a) {
      Tensor up = q;
      up[a] += 0.1;
      const double d = marl::mix_values(up, s, params, spec)[0] - base;
      ++checks;
      if (d < 0.0) ++lowered;
      worst = std::min(worst, d);
    }
  }
  return {lowered == 0, std::to_string(lowered) + " of " + std::to_string(checks) +
                            " raises lowered Q_tot (most negative change " + fmt(worst, 3) + ")"};
}

// Criteria 7 and 8 share one set of desk runs.
struct DeskRuns {
  std::vector<std::uint64_t> seeds;
  std::size_t max_rounds = 0;
  std::vector<std::array<orchestrator::Summary, 3>> rows;  // dr-fl, greedy, random
  LedgerCheck ledger;
  double seconds = 0.0;
};

const DeskRuns& desk_runs() {
  static std::unique_ptr<DeskRuns> cache;
  if (cache) return *cache;
  cache = std::make_unique<DeskRuns>();
  const auto started = std::chrono::steady_clock::now();
  const ExperimentConfig base = cli::load_config(DRFL_DESK_CONFIG);
  cache->max_rounds = base.run.max_rounds;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::array<orchestrator::Summary, 3> row;
    const std::array<SchedulerKind, 3> kinds{SchedulerKind::kDrfl, SchedulerKind::kGreedy,
                                             SchedulerKind::kRandom};
    for (std::size_t k = 0; k < 3; ++k) {
      ExperimentConfig cfg = base;
      cfg.run.seed = seed;
      cfg.scheduler.kind = kinds[k];
      row[k] = run_checked(cfg, cache->ledger);
    }
    cache->seeds.push_back(seed);
    cache->rows.push_back(row);
    std::cout << "  desk seed " << seed << ": large depletion dr-fl/greedy/random =";
    for (const auto& s : row) {
      const auto& d = s.class_depletion_round[static_cast<std::size_t>(simworld::DeviceClass::kLarge)];
      std::cout << ' ' << (d ? std::to_string(*d) : "censored");
    }
    std::cout << ", best accuracy =";
    for (const auto& s : row) std::cout << ' ' << fmt(s.best_accuracy);
    std::cout << std::endl;
  }
  cache->seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return *cache;
}

Verdict depletion() {
  const DeskRuns& runs = desk_runs();
  const std::size_t large = static_cast<std::size_t>(simworld::DeviceClass::kLarge);
  auto round_of = [&](const orchestrator::Summary& s) {
    return s.class_depletion_round[large].value_or(runs.max_rounds + 1);
  };
  std::size_t wins = 0;
  for (const auto& row : runs.rows) wins += round_of(row[0]) > round_of(row[1]);
  return {wins >= 4, "dr-fl depletes the large class strictly later than greedy in " +
                         std::to_string(wins) + "/5 seeds (need >= 4; censored = max_rounds + 1); desk runs took " +
                         fmt(runs.seconds, 4) + " s"};
}

Verdict efficacy() {
  const DeskRuns& runs = desk_runs();
  std::size_t vs_greedy = 0, vs_random = 0;
  for (const auto& row : runs.rows) {
    vs_greedy += row[0].best_accuracy >= row[1].best_accuracy;
    vs_random += row[0].best_accuracy >= row[2].best_accuracy;
  }
  const bool ledger_ok = runs.ledger.worst_gap <= 1e-9 && runs.ledger.min_remaining >= 0.0;
  return {vs_greedy >= 3 && vs_random >= 4 && ledger_ok,
          "dr-fl best accuracy >= greedy in " + std::to_string(vs_greedy) +
              "/5 (need >= 3), >= random in " + std::to_string(vs_random) +
              "/5 (need >= 4); desk ledger gap " + fmt(runs.ledger.worst_gap, 3) + " J"};
}

Verdict non_iid() {
  const ExperimentConfig cfg;
  std::array<double, 3> mean{};
  const std::array<double, 3> alphas{0.1, 1.0, 1e6};
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto data = datagen::generate_synthetic(
        {cfg.data.classes, cfg.data.samples, cfg.data.feature_width, cfg.data.radius}, seed);
    for (std::size_t a = 0; a < 3; ++a) {
      const auto plan = datagen::dirichlet_partition(data, cfg.devices.total(), alphas[a],
                                                     cfg.data.validation_fraction, seed);
      mean[a] += datagen::mean_label_entropy(data, plan) / 20.0;
    }
  }
  return {mean[0] < mean[1] && mean[1] < mean[2],
          "mean label entropy " + fmt(mean[0]) + " < " + fmt(mean[1]) + " < " + fmt(mean[2]) +
              " nats (alpha 0.1, 1, 1e6; 20 seeds)"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict determinism() {
  const fs::path dir = fs::temp_directory_path() / "drfl_acceptance_determinism";
  fs::remove_all(dir);
  auto invoke = [&](const std::string& name) {
    const std::string cmd = std::string("DRFL_LOG_LEVEL=warn \"") + DRFL_TOOL_PATH +
                            "\" run --config \"" + DRFL_DESK_CONFIG +
                            "\" --seed 3 --episodes 3 --max-rounds 30 --out \"" +
                            (dir / name).string() + "\"";
    return std::system(cmd.c_str());
  };
  if (invoke("a") != 0 || invoke("b") != 0) return {false, "drfl run failed"};
  std::size_t identical = 0, total = 0;
  for (const char* f : {"metrics.jsonl", "summary.json", "config.resolved.json", "model.bin",
                        "learner.bin"}) {
    ++total;
    const std::string a = slurp(dir / "a" / f);
    if (!a.empty() && a == slurp(dir / "b" / f)) ++identical;
  }
  fs::remove_all(dir);
  return {identical == total, std::to_string(identical) + "/" + std::to_string(total) +
                                  " output files byte-identical across two invocations (dr-fl, desk config)"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<int, std::function<Verdict()>>> criteria{
      {1, gradients}, {2, fedavg},    {3, coverage}, {4, ledger},  {5, matrix_game},
      {6, monotone},  {7, depletion}, {8, efficacy}, {9, non_iid}, {10, determinism}};
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failures = 0;
  for (const auto& [id, check] : criteria) {
    if (!only.empty() && !only.count(id)) continue;
    const auto started = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (!v.pass) ++failures;
    std::cout << "criterion " << id << ": " << (v.pass ? "PASS" : "FAIL") << " - " << v.detail
              << " [" << fmt(secs, 3) << " s]" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
