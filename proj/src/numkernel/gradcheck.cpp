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

#include "drfl/numkernel/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "drfl/errors.hpp"

namespace drfl::numkernel {

namespace {

double evaluate(const ParameterSet& params, const LossBuilder& loss) {
  Tape tape;
  std::vector<Var> vars;
  for (const Tensor& p : params) vars.push_back(tape.constant(p));
  const Var out = loss(tape, vars);
  if (out.value().size() != 1) throw ContractError("grad_check: loss must be a scalar");
  return out.value()[0];
}

}  // namespace

GradCheckReport grad_check(const ParameterSet& params, const LossBuilder& loss, double step,
                           double floor) {
  if (!(step > 0.0) || !(floor > 0.0)) throw ContractError("grad_check: step and floor must be positive");
  ParameterSet analytic;
  {
    Tape tape;
    std::vector<Var> vars;
    for (const Tensor& p : params) vars.push_back(tape.parameter(p));
    tape.backward(loss(tape, vars));
    for (const Var& v : vars) analytic.push_back(v.grad());
  }
  GradCheckReport report;
  ParameterSet probe = params;
  for (std::size_t t = 0; t < probe.size(); ++t) {
    for (std::size_t i = 0; i < probe[t].size(); ++i) {
      const double keep = probe[t][i];
      probe[t][i] = keep + step;
      const double up = evaluate(probe, loss);
      probe[t][i] = keep - step;
      const double down = evaluate(probe, loss);
      probe[t][i] = keep;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[t][i];
      const double abs_err = std::abs(a - numeric);
      const double rel = abs_err / std::max({std::abs(a), std::abs(numeric), floor});
      report.max_abs_error = std::max(report.max_abs_error, abs_err);
      report.max_rel_error = std::max(report.max_rel_error, rel);
      ++report.entries;
    }
  }
  return report;
}

}  // namespace drfl::numkernel
