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

#include <string>
#include <string_view>

#include <json.hpp>

#include "drfl/orchestrator/config.hpp"

namespace drfl::cli {

using orchestrator::ExperimentConfig;

// Missing keys keep their defaults; unknown keys and ill-typed values throw
// ConfigError with the dotted key.
ExperimentConfig config_from_json(const nlohmann::json& doc);
// Every key, defaults expanded.
nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const std::string& path);

// {dotted key: {"default": ..., "description": ...}} for every key.
nlohmann::json config_schema();

// Returns `doc` with `dotted` replaced by `value`; throws ConfigError when
// the key does not name a scalar of the resolved config.
nlohmann::json with_value(const nlohmann::json& doc, std::string_view dotted,
                          const nlohmann::json& value);

}  // namespace drfl::cli
