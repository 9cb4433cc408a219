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

#include "drfl/cli/commands.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "drfl/cli/oracles.hpp"
#include "drfl/errors.hpp"
#include "drfl/orchestrator/metrics.hpp"
#include "drfl/taskmodel/training.hpp"

namespace drfl::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double round_significant(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return std::strtod(buf, nullptr);
}

double parse_double(const std::string& s, const std::string& what) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ConfigError(what, "cannot parse number '" + s + "'");
  }
  return v;
}

std::uint64_t parse_uint(const std::string& s, const std::string& what) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ConfigError(what, "cannot parse integer '" + s + "'");
  }
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, sep)) out.push_back(part);
  return out;
}

std::pair<double, double> mean_std(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

void setup_logging() {
  auto logger = spdlog::stderr_logger_st("drfl");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::level::level_enum level = spdlog::level::info;
  if (const char* env = std::getenv("DRFL_LOG_LEVEL")) level = spdlog::level::from_str(env);
  spdlog::set_level(level);
}

}  // namespace

ExperimentConfig apply_overrides(ExperimentConfig c, const RunOverrides& o) {
  if (o.seed) c.run.seed = *o.seed;
  if (o.scheduler) {
    const auto kind = orchestrator::parse_scheduler(*o.scheduler);
    if (!kind) throw ConfigError("--scheduler", "must be one of dr-fl, greedy, random, static");
    c.scheduler.kind = *kind;
  }
  if (o.episodes) c.marl.episodes = *o.episodes;
  if (o.max_rounds) c.run.max_rounds = *o.max_rounds;
  c.validate();
  return c;
}

orchestrator::Summary run_to_directory(const ExperimentConfig& config, const std::string& out_dir) {
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  write_json_file(dir / "config.resolved.json", config_to_json(config));

  const auto started = std::chrono::steady_clock::now();
  orchestrator::Experiment exp(config);
  orchestrator::JsonlWriter metrics((dir / "metrics.jsonl").string());
  orchestrator::RunHooks hooks;
  hooks.on_round = [&](const orchestrator::RoundReport& r) {
    metrics.write(orchestrator::to_json(r));
    if (r.round == 1) spdlog::debug("episode {} ({})", r.episode, orchestrator::to_string(r.phase));
  };
  const orchestrator::Summary summary = exp.run(hooks);
  const json s = orchestrator::to_json(summary);
  metrics.write(s);
  write_json_file(dir / "summary.json", s);
  taskmodel::save_checkpoint((dir / "model.bin").string(), exp.model());
  if (exp.learner() != nullptr) exp.learner()->save((dir / "learner.bin").string());
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  spdlog::info("{}: {} rounds, best accuracy {:.4f}, final E_all {:.1f} J ({:.1f} s)",
               orchestrator::to_string(summary.scheduler), summary.rounds, summary.best_accuracy,
               summary.final_e_all, secs);
  return summary;
}

std::vector<double> parse_values(const std::string& spec, std::size_t count) {
  std::vector<double> out;
  const auto range = spec.find("..");
  if (range != std::string::npos) {
    const double a = parse_double(spec.substr(0, range), "--values");
    const double b = parse_double(spec.substr(range + 2), "--values");
    if (count == 0) throw ConfigError("--count", "must be at least 1");
    if (count == 1) return {a};
    for (std::size_t i = 0; i < count; ++i) {
      out.push_back(round_significant(a + (b - a) * static_cast<double>(i) /
                                              static_cast<double>(count - 1)));
    }
    return out;
  }
  for (const std::string& part : split(spec, ',')) out.push_back(parse_double(part, "--values"));
  if (out.empty()) throw ConfigError("--values", "no values given");
  return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& spec) {
  std::vector<std::uint64_t> out;
  const auto range = spec.find("..");
  if (range != std::string::npos) {
    const std::uint64_t a = parse_uint(spec.substr(0, range), "--seeds");
    const std::uint64_t b = parse_uint(spec.substr(range + 2), "--seeds");
    if (b < a) throw ConfigError("--seeds", "empty range");
    for (std::uint64_t s = a; s <= b; ++s) out.push_back(s);
    return out;
  }
  for (const std::string& part : split(spec, ',')) out.push_back(parse_uint(part, "--seeds"));
  if (out.empty()) throw ConfigError("--seeds", "no seeds given");
  return out;
}

std::vector<SweepRow> sweep_to_directory(const json& base, const std::string& param,
                                         const std::vector<double>& values,
                                         const std::vector<std::uint64_t>& seeds,
                                         const std::string& out_dir) {
  // Validate the parameter path before running anything.
  with_value(base, param, values.empty() ? 0.0 : values.front());
  const fs::path root(out_dir);
  fs::create_directories(root);
  std::vector<SweepRow> rows;
  for (double v : values) {
    SweepRow row;
    row.value = v;
    const json doc = with_value(base, param, v);
    const fs::path vdir = root / (param + "=" + shortest(v));
    for (std::uint64_t seed : seeds) {
      ExperimentConfig cfg = config_from_json(doc);
      cfg.run.seed = seed;
      row.runs.push_back(run_to_directory(cfg, (vdir / ("seed-" + std::to_string(seed))).string()));
    }
    rows.push_back(std::move(row));
  }
  std::ofstream csv(root / "summary.csv", std::ios::trunc);
  csv << "param,value,seeds,best_accuracy_mean,best_accuracy_std,final_e_all_mean,"
         "final_e_all_std,rounds_mean,rounds_std\n";
  for (const SweepRow& row : rows) {
    std::vector<double> acc, energy, rounds;
    for (const auto& s : row.runs) {
      acc.push_back(s.best_accuracy);
      energy.push_back(s.final_e_all);
      rounds.push_back(static_cast<double>(s.rounds));
    }
    const auto [am, as] = mean_std(acc);
    const auto [em, es] = mean_std(energy);
    const auto [rm, rs] = mean_std(rounds);
    csv << param << ',' << shortest(row.value) << ',' << row.runs.size() << ',' << shortest(am)
        << ',' << shortest(as) << ',' << shortest(em) << ',' << shortest(es) << ','
        << shortest(rm) << ',' << shortest(rs) << '\n';
  }
  if (!csv) throw std::runtime_error("cannot write " + (root / "summary.csv").string());
  return rows;
}

int main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Energy-aware layer-wise federated learning simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out";
  RunOverrides overrides;
  std::string scheduler;
  std::uint64_t seed = 0;
  std::size_t episodes = 0, max_rounds = 0;
  auto* run = app.add_subcommand("run", "run one experiment");
  run->add_option("--config", config_path, "config file (JSON)");
  run->add_option("--seed", seed, "override run.seed");
  run->add_option("--out", out_dir, "output directory")->capture_default_str();
  run->add_option("--scheduler", scheduler, "override scheduler.kind");
  run->add_option("--episodes", episodes, "override marl.episodes");
  run->add_option("--max-rounds", max_rounds, "override run.max_rounds");

  std::string param = "data.validation_fraction", values = "0.01..0.10", seeds_spec;
  std::size_t count = 10;
  auto* sweep = app.add_subcommand("sweep", "run one experiment per parameter value");
  sweep->add_option("--config", config_path, "config file (JSON)");
  sweep->add_option("--param", param, "dotted config key")->capture_default_str();
  sweep->add_option("--values", values, "a..b or v1,v2,...")->capture_default_str();
  sweep->add_option("--count", count, "number of values for a range")->capture_default_str();
  sweep->add_option("--seeds", seeds_spec, "a..b or s1,s2,... (default: run.seed)");
  sweep->add_option("--out", out_dir, "output directory")->capture_default_str();

  std::string which = "all";
  auto* oracle = app.add_subcommand("oracle", "run the brute-force oracles");
  oracle->add_option("name", which, "fedavg, gradcheck, matrix-game or all")
      ->check(CLI::IsMember({"fedavg", "gradcheck", "matrix-game", "all"}))
      ->capture_default_str();

  app.add_subcommand("schema", "print every config key with its default");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return kExitConfig;
  }

  try {
    setup_logging();
  } catch (const spdlog::spdlog_ex&) {
    // Logger already registered (repeated in-process calls).
  }

  try {
    auto load = [&]() -> json {
      if (config_path.empty()) return config_to_json(ExperimentConfig{});
      std::ifstream in(config_path);
      if (!in) throw ConfigError("--config", "cannot read " + config_path);
      try {
        return json::parse(in, nullptr, true, true);
      } catch (const json::parse_error& e) {
        throw ConfigError("--config", config_path + ": " + e.what());
      }
    };
    if (run->parsed()) {
      if (run->count("--seed")) overrides.seed = seed;
      if (run->count("--scheduler")) overrides.scheduler = scheduler;
      if (run->count("--episodes")) overrides.episodes = episodes;
      if (run->count("--max-rounds")) overrides.max_rounds = max_rounds;
      const ExperimentConfig cfg = apply_overrides(config_from_json(load()), overrides);
      run_to_directory(cfg, out_dir);
    } else if (sweep->parsed()) {
      const json base = load();
      config_from_json(base);
      std::vector<std::uint64_t> seeds;
      if (seeds_spec.empty()) {
        seeds.push_back(config_from_json(base).run.seed);
      } else {
        seeds = parse_seeds(seeds_spec);
      }
      sweep_to_directory(base, param, parse_values(values, count), seeds, out_dir);
    } else if (oracle->parsed()) {
      bool ok = true;
      for (const OracleResult& r : run_oracles(which)) {
        out << (r.pass ? "PASS " : "FAIL ") << r.name << ": observed " << r.observed
            << (r.name.rfind("matrix-game", 0) == 0 ? " >= " : " < ") << r.threshold << " ("
            << r.detail << ")\n";
        ok = ok && r.pass;
      }
      return ok ? kExitOk : kExitRuntime;
    } else {
      out << config_schema().dump(2) << '\n';
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace drfl::cli
