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

#include "drfl/numkernel/gru.hpp"

#include <cmath>

#include "drfl/errors.hpp"

namespace drfl::numkernel {

GruCellParams GruCellParams::zeros(std::size_t input, std::size_t hidden) {
  GruCellParams p;
  p.w_ir = p.w_iz = p.w_in = Tensor({input, hidden});
  p.w_hr = p.w_hz = p.w_hn = Tensor({hidden, hidden});
  p.b_ir = p.b_iz = p.b_in = p.b_hr = p.b_hz = p.b_hn = Tensor({hidden});
  return p;
}

GruCellParams GruCellParams::random(std::size_t input, std::size_t hidden, Rng& rng) {
  GruCellParams p = zeros(input, hidden);
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (Tensor* t : {&p.w_ir, &p.w_iz, &p.w_in, &p.w_hr, &p.w_hz, &p.w_hn, &p.b_ir, &p.b_iz,
                    &p.b_in, &p.b_hr, &p.b_hz, &p.b_hn}) {
    for (double& v : t->values()) v = bound * (2.0 * uniform01(rng) - 1.0);
  }
  return p;
}

void GruCellParams::validate() const {
  const Shape in_h = w_ir.shape();
  if (in_h.size() != 2) throw ContractError("gru: input weights must be matrices");
  const std::size_t hidden = in_h[1];
  const Shape hh{hidden, hidden};
  const Shape bias{hidden};
  if (w_iz.shape() != in_h || w_in.shape() != in_h) {
    throw ContractError("gru: input-to-hidden gate weights disagree");
  }
  if (w_hr.shape() != hh || w_hz.shape() != hh || w_hn.shape() != hh) {
    throw ContractError("gru: hidden-to-hidden weights must be " + shape_string(hh));
  }
  for (const Tensor* b : {&b_ir, &b_iz, &b_in, &b_hr, &b_hz, &b_hn}) {
    if (b->shape() != bias) throw ContractError("gru: biases must be " + shape_string(bias));
  }
}

ParameterSet GruCellParams::flatten() const {
  return {w_ir, w_iz, w_in, w_hr, w_hz, w_hn, b_ir, b_iz, b_in, b_hr, b_hz, b_hn};
}

GruCellParams GruCellParams::unflatten(const ParameterSet& p, std::size_t o) {
  if (p.size() < o + kTensorCount) throw ContractError("gru: too few tensors to unflatten");
  GruCellParams g{p[o],     p[o + 1], p[o + 2], p[o + 3],  p[o + 4],  p[o + 5],
                  p[o + 6], p[o + 7], p[o + 8], p[o + 9], p[o + 10], p[o + 11]};
  g.validate();
  return g;
}

GruCellVars bind(Tape& tape, const GruCellParams& p, bool trainable) {
  p.validate();
  auto put = [&](const Tensor& t) { return trainable ? tape.parameter(t) : tape.constant(t); };
  return {put(p.w_ir), put(p.w_iz), put(p.w_in), put(p.w_hr), put(p.w_hz), put(p.w_hn),
          put(p.b_ir), put(p.b_iz), put(p.b_in), put(p.b_hr), put(p.b_hz), put(p.b_hn)};
}

Var gru_step(Var x, Var h_prev, const GruCellVars& p) {
  const Tensor& xv = x.value();
  const Tensor& hv = h_prev.value();
  const Shape& wi = p.w_ir.value().shape();
  if (xv.rank() != 2 || hv.rank() != 2 || xv.shape()[0] != hv.shape()[0] ||
      xv.shape()[1] != wi[0] || hv.shape()[1] != wi[1]) {
    throw ContractError("gru_step: x " + shape_string(xv.shape()) + ", h " +
                        shape_string(hv.shape()) + " do not fit input weights " +
                        shape_string(wi));
  }
  Var r = sigmoid(add(dense(x, p.w_ir, p.b_ir), dense(h_prev, p.w_hr, p.b_hr)));
  Var z = sigmoid(add(dense(x, p.w_iz, p.b_iz), dense(h_prev, p.w_hz, p.b_hz)));
  Var n = tanh(add(dense(x, p.w_in, p.b_in), mul(r, dense(h_prev, p.w_hn, p.b_hn))));
  return add(mul(one_minus(z), n), mul(z, h_prev));
}

}  // namespace drfl::numkernel
