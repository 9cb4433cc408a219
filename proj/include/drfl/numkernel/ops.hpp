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
#include <span>
#include <vector>

#include "drfl/numkernel/tape.hpp"

namespace drfl::numkernel {

// All ops throw ContractError on shape mismatch.

Var matmul(Var a, Var b);                  // [m x k] * [k x n]
Var add(Var a, Var b);                     // same shape
Var sub(Var a, Var b);                     // same shape
Var mul(Var a, Var b);                     // elementwise, same shape
Var add_bias(Var x, Var bias);             // [m x n] + [n] broadcast over rows
Var scale(Var x, double s);
Var add_scalar(Var x, double s);
Var one_minus(Var x);

Var sigmoid(Var x);
Var tanh(Var x);
Var relu(Var x);
Var elu(Var x);
Var abs(Var x);
Var square(Var x);

Var sum(Var x);                            // -> [1]
Var mean(Var x);                           // -> [1]

// x * weights + bias, with x [batch x in], weights [in x out], bias [out].
Var dense(Var x, Var weights, Var bias);

// Mean negative log-likelihood of `labels` under softmax(logits), computed
// with a log-sum-exp shift.
Var softmax_cross_entropy(Var logits, std::span<const int> labels);

// out[r] = x[r, index[r]]  -> [rows x 1]
Var gather_cols(Var x, std::span<const std::size_t> index);

Var reshape(Var x, Shape shape);
Var concat_rows(const std::vector<Var>& parts);

// Per-row vector-matrix product: x [B x N], w [B x (N*E)] viewed as B
// matrices of N x E;  out[b, e] = sum_n x[b, n] * w[b, n*E + e]  -> [B x E]
Var row_matvec(Var x, Var w, std::size_t out_width);

// out[b] = sum_e a[b, e] * c[b, e]  -> [B x 1]
Var row_dot(Var a, Var c);

}  // namespace drfl::numkernel
