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

#include <cstddef>
#include <functional>
#include <span>

#include "drfl/numkernel/tape.hpp"

namespace drfl::numkernel {

// Builds a scalar loss on `tape` from the bound parameters.
using LossBuilder = std::function<Var(Tape& tape, std::span<const Var> params)>;

struct GradCheckReport {
  std::size_t entries = 0;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
};

// Compares reverse-mode gradients with central differences on every entry.
// Relative error is |a - n| / max(|a|, |n|, floor).
GradCheckReport grad_check(const ParameterSet& params, const LossBuilder& loss, double step = 1e-5,
                           double floor = 1e-6);

}  // namespace drfl::numkernel
