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
#include <fstream>
#include <sstream>

#include "drfl/cli/commands.hpp"
#include "drfl/cli/config_io.hpp"
#include "drfl/errors.hpp"

using namespace drfl;
using namespace drfl::cli;
namespace fs = std::filesystem;

namespace {

nlohmann::json tiny_doc() {
  return nlohmann::json::parse(R"({
    "devices": {"counts": {"small": 2, "medium": 0, "large": 2}},
    "model": {"depth": 2, "block_width": 8, "bottleneck_width": 4},
    "data": {"samples": 200, "feature_width": 4, "classes": 3, "validation_fraction": 0.1},
    "scheduler": {"kind": "greedy", "participation": 0.5,
                  "static_depths": {"small": 1, "medium": 1, "large": 2}},
    "run": {"max_rounds": 3, "local_epochs": 1}
  })");
}

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("drfl_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_doc(const fs::path& dir, const nlohmann::json& doc) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << doc.dump(2);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_tool(std::vector<std::string> args, std::string* err_text = nullptr) {
  args.insert(args.begin(), "drfl");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
  if (err_text) *err_text = err.str() + out.str();
  return code;
}

}  // namespace

TEST_CASE("negative alpha is a config error citing the key") {
  auto doc = tiny_doc();
  doc["data"]["alpha"] = -1.0;
  const auto dir = temp_dir("alpha");
  std::string err;
  CHECK(run_tool({"run", "--config", write_doc(dir, doc).string(), "--out", (dir / "o").string()},
                 &err) == kExitConfig);
  CHECK(err.find("data.alpha") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "o" / "metrics.jsonl"));
}

TEST_CASE("unknown keys and bad types are rejected") {
  auto doc = tiny_doc();
  doc["data"]["alhpa"] = 1.0;
  CHECK_THROWS_WITH_AS(config_from_json(doc), doctest::Contains("data.alhpa"), ConfigError);
  doc = tiny_doc();
  doc["run"]["max_rounds"] = "many";
  CHECK_THROWS_WITH_AS(config_from_json(doc), doctest::Contains("run.max_rounds"), ConfigError);
  CHECK(run_tool({"run", "--config", "/nonexistent/config.json"}) == kExitConfig);
  CHECK(run_tool({"bogus-subcommand"}) == kExitConfig);
}

TEST_CASE("config JSON round-trips") {
  const auto c = config_from_json(tiny_doc());
  CHECK(config_to_json(config_from_json(config_to_json(c))) == config_to_json(c));
}

TEST_CASE("schema lists every resolved key") {
  const auto schema = config_schema();
  std::vector<std::string> keys;
  const auto flat = config_to_json(orchestrator::ExperimentConfig{}).flatten();
  for (const auto& [ptr, value] : flat.items()) {
    std::string dotted = ptr.substr(1);
    std::replace(dotted.begin(), dotted.end(), '/', '.');
    INFO(dotted);
    REQUIRE(schema.contains(dotted));
    CHECK(schema[dotted].contains("description"));
    CHECK(schema[dotted]["default"] == value);
  }
}

TEST_CASE("with_value replaces scalars only") {
  const auto doc = with_value(tiny_doc(), "data.alpha", 2.5);
  CHECK(config_from_json(doc).data.alpha == 2.5);
  CHECK_THROWS_AS(with_value(tiny_doc(), "data.nothing", 1.0), ConfigError);
  CHECK_THROWS_AS(with_value(tiny_doc(), "data", 1.0), ConfigError);
}

TEST_CASE("value and seed lists parse") {
  CHECK(parse_values("0.1..1.0", 10).size() == 10);
  CHECK(parse_values("0.1..1.0", 10)[4] == doctest::Approx(0.5));
  CHECK(parse_values("1,2.5", 0) == std::vector<double>{1.0, 2.5});
  CHECK(parse_seeds("3..5") == std::vector<std::uint64_t>{3, 4, 5});
  CHECK(parse_seeds("7,9") == std::vector<std::uint64_t>{7, 9});
  CHECK_THROWS(parse_values("a..b", 3));
  CHECK_THROWS(parse_seeds("5..3"));
}

TEST_CASE("identical runs write byte-identical metrics") {
  const auto dir = temp_dir("determinism");
  const auto cfg = write_doc(dir, tiny_doc()).string();
  REQUIRE(run_tool({"run", "--config", cfg, "--seed", "4", "--out", (dir / "a").string()}) ==
          kExitOk);
  REQUIRE(run_tool({"run", "--config", cfg, "--seed", "4", "--out", (dir / "b").string()}) ==
          kExitOk);
  const std::string a = slurp(dir / "a" / "metrics.jsonl");
  CHECK_FALSE(a.empty());
  CHECK(a == slurp(dir / "b" / "metrics.jsonl"));
  CHECK(slurp(dir / "a" / "model.bin") == slurp(dir / "b" / "model.bin"));
  CHECK(fs::exists(dir / "a" / "summary.json"));
  CHECK(fs::exists(dir / "a" / "config.resolved.json"));
  REQUIRE(run_tool({"run", "--config", cfg, "--seed", "5", "--out", (dir / "c").string()}) ==
          kExitOk);
  CHECK(a != slurp(dir / "c" / "metrics.jsonl"));
}

TEST_CASE("sweep writes one directory per value and a summary row each") {
  const auto dir = temp_dir("sweep");
  const auto cfg = write_doc(dir, tiny_doc()).string();
  REQUIRE(run_tool({"sweep", "--config", cfg, "--param", "data.alpha", "--values", "0.1..1.0",
                    "--count", "10", "--seeds", "1", "--out", (dir / "s").string()}) == kExitOk);
  std::size_t subdirs = 0;
  for (const auto& e : fs::directory_iterator(dir / "s")) subdirs += e.is_directory();
  CHECK(subdirs == 10);
  std::ifstream csv(dir / "s" / "summary.csv");
  std::string line;
  std::size_t rows = 0;
  std::getline(csv, line);
  CHECK(line.rfind("param,value,seeds", 0) == 0);
  while (std::getline(csv, line)) rows += !line.empty();
  CHECK(rows == 10);
}

TEST_CASE("sweep over seeds aggregates mean and sample std") {
  const auto dir = temp_dir("seeds");
  const auto rows = sweep_to_directory(tiny_doc(), "data.alpha", {1.0}, {1, 2, 3},
                                       (dir / "s").string());
  REQUIRE(rows.size() == 1);
  REQUIRE(rows[0].runs.size() == 3);
  double mean = 0.0;
  for (const auto& r : rows[0].runs) mean += r.best_accuracy / 3.0;
  double var = 0.0;
  for (const auto& r : rows[0].runs) var += (r.best_accuracy - mean) * (r.best_accuracy - mean) / 2.0;
  std::ifstream csv(dir / "s" / "summary.csv");
  std::string header, line;
  std::getline(csv, header);
  std::getline(csv, line);
  std::vector<std::string> cells;
  std::stringstream ss(line);
  for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
  REQUIRE(cells.size() >= 5);
  CHECK(cells[2] == "3");
  CHECK(std::stod(cells[3]) == doctest::Approx(mean).epsilon(1e-9));
  CHECK(std::stod(cells[4]) == doctest::Approx(std::sqrt(var)).epsilon(1e-9));
  CHECK(fs::exists(dir / "s" / "data.alpha=1" / "seed-2" / "metrics.jsonl"));
}

TEST_CASE("schema subcommand prints JSON") {
  std::vector<std::string> args{"drfl", "schema"};
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  REQUIRE(cli::main(2, argv.data(), out, err) == kExitOk);
  CHECK(nlohmann::json::parse(out.str()).contains("data.alpha"));
}
