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

#include "drfl/orchestrator/metrics.hpp"

#include <stdexcept>

namespace drfl::orchestrator {

namespace {

constexpr std::array<const char*, kDeviceClassCount> kClassNames{"small", "medium", "large"};

template <typename T>
nlohmann::json by_class(const std::array<T, kDeviceClassCount>& v) {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t c = 0; c < kDeviceClassCount; ++c) j[kClassNames[c]] = v[c];
  return j;
}

nlohmann::json by_class(const std::array<std::optional<std::size_t>, kDeviceClassCount>& v,
                        const std::array<std::size_t, kDeviceClassCount>& sizes) {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t c = 0; c < kDeviceClassCount; ++c) {
    if (sizes[c] == 0) continue;
    j[kClassNames[c]] = v[c] ? nlohmann::json(*v[c]) : nlohmann::json(nullptr);
  }
  return j;
}

}  // namespace

nlohmann::json to_json(const RoundReport& r) {
  nlohmann::json j;
  j["type"] = "round";
  j["episode"] = r.episode;
  j["phase"] = to_string(r.phase);
  j["round"] = r.round;
  j["requested"] = r.requested;
  j["actions"] = r.actions;
  if (!r.q.empty()) j["q"] = r.q;
  j["selected"] = r.selected;
  j["energy_spent"] = r.energy_spent;
  j["t_train"] = r.t_train;
  j["t_com"] = r.t_com;
  j["val_accuracy"] = r.val_accuracy;
  j["depth_accuracy"] = r.depth_accuracy;
  j["e_all"] = r.e_all;
  j["t_all"] = r.t_all;
  j["reward"] = r.reward;
  j["depleted_by_class"] = by_class(r.depleted_by_class);
  return j;
}

nlohmann::json to_json(const Summary& s) {
  nlohmann::json j;
  j["type"] = "summary";
  j["scheduler"] = to_string(s.scheduler);
  j["episodes"] = s.episodes;
  j["rounds"] = s.rounds;
  j["initial_accuracy"] = s.initial_accuracy;
  j["initial_depth_accuracy"] = s.initial_depth_accuracy;
  j["best_accuracy"] = s.best_accuracy;
  j["final_accuracy"] = s.final_accuracy;
  j["initial_e_all"] = s.initial_e_all;
  j["final_e_all"] = s.final_e_all;
  j["total_energy_spent"] = s.total_energy_spent;
  j["class_size"] = by_class(s.class_size);
  j["class_depletion_round"] = by_class(s.class_depletion_round, s.class_size);
  j["class_last_active_round"] = by_class(s.class_last_active_round, s.class_size);
  j["train_steps"] = s.train_steps;
  return j;
}

JsonlWriter::JsonlWriter(const std::string& path) : out_(path, std::ios::trunc), path_(path) {
  if (!out_) throw std::runtime_error("cannot write " + path);
}

void JsonlWriter::write(const nlohmann::json& record) {
  out_ << record.dump() << '\n';
  out_.flush();
  if (!out_) throw std::runtime_error("write failed: " + path_);
}

}  // namespace drfl::orchestrator
