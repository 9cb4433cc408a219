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

#include "drfl/numkernel/tensor.hpp"

namespace drfl::numkernel {

// p <- p - lr * g for every tensor pair. lr must be finite and >= 0.
void sgd_step(ParameterSet& params, const ParameterSet& grads, double lr);

// Rescales `grads` in place so their joint L2 norm is at most `max_norm`.
// Returns the norm before clipping.
double clip_grad_norm(ParameterSet& grads, double max_norm);

class Adam {
 public:
  Adam(const ParameterSet& like, double lr, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8);

  void step(ParameterSet& params, const ParameterSet& grads);

  std::size_t steps() const { return t_; }
  double lr() const { return lr_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  ParameterSet m_, v_;
};

}  // namespace drfl::numkernel
