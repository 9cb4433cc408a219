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

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "drfl/cli/config_io.hpp"
#include "drfl/orchestrator/experiment.hpp"

namespace drfl::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitRuntime = 2;

struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> scheduler;
  std::optional<std::size_t> episodes;
  std::optional<std::size_t> max_rounds;
};

ExperimentConfig apply_overrides(ExperimentConfig config, const RunOverrides& o);

// Runs one experiment and writes metrics.jsonl, summary.json,
// config.resolved.json, model.bin and (dr-fl) learner.bin into `out_dir`.
orchestrator::Summary run_to_directory(const ExperimentConfig& config, const std::string& out_dir);

// "a..b" (with `count` evenly spaced values) or "v1,v2,...".
std::vector<double> parse_values(const std::string& spec, std::size_t count);
// "a..b" (integers, inclusive) or "s1,s2,...".
std::vector<std::uint64_t> parse_seeds(const std::string& spec);

struct SweepRow {
  double value = 0.0;
  std::vector<orchestrator::Summary> runs;  // one per seed
};

std::vector<SweepRow> sweep_to_directory(const nlohmann::json& base, const std::string& param,
                                         const std::vector<double>& values,
                                         const std::vector<std::uint64_t>& seeds,
                                         const std::string& out_dir);

// Entry point of the drfl tool; returns the process exit code.
int main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace drfl::cli
