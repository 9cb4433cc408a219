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

#include "drfl/numkernel/ops.hpp"
#include "drfl/rng.hpp"

namespace drfl::numkernel {

// Gated recurrent unit:
//   r  = sigmoid(x W_ir + b_ir + h W_hr + b_hr)
//   z  = sigmoid(x W_iz + b_iz + h W_hz + b_hz)
//   n  = tanh(x W_in + b_in + r * (h W_hn + b_hn))
//   h' = (1 - z) * n + z * h
struct GruCellParams {
  Tensor w_ir, w_iz, w_in;  // [input x hidden]
  Tensor w_hr, w_hz, w_hn;  // [hidden x hidden]
  Tensor b_ir, b_iz, b_in;  // [hidden]
  Tensor b_hr, b_hz, b_hn;  // [hidden]

  static GruCellParams zeros(std::size_t input, std::size_t hidden);
  // Uniform(-1/sqrt(hidden), 1/sqrt(hidden)), the usual recurrent init.
  static GruCellParams random(std::size_t input, std::size_t hidden, Rng& rng);

  std::size_t input_width() const { return w_ir.shape().at(0); }
  std::size_t hidden_width() const { return w_hr.shape().at(0); }

  // Throws ContractError when gate shapes disagree.
  void validate() const;

  ParameterSet flatten() const;
  static GruCellParams unflatten(const ParameterSet& p, std::size_t offset = 0);
  static constexpr std::size_t kTensorCount = 12;
};

struct GruCellVars {
  Var w_ir, w_iz, w_in, w_hr, w_hz, w_hn;
  Var b_ir, b_iz, b_in, b_hr, b_hz, b_hn;
};

// Places the cell parameters on `tape`, as parameters when `trainable`.
GruCellVars bind(Tape& tape, const GruCellParams& p, bool trainable);

// x [batch x input], h_prev [batch x hidden] -> h [batch x hidden]
Var gru_step(Var x, Var h_prev, const GruCellVars& params);

}  // namespace drfl::numkernel
