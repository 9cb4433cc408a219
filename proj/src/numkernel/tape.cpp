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

#include "drfl/numkernel/tape.hpp"

#include "drfl/errors.hpp"

namespace drfl::numkernel {

const Tensor& Var::value() const { return tape->value(id); }
const Tensor& Var::grad() const { return tape->grad(id); }

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

Var Tape::constant(Tensor value) {
  return push(Node{std::move(value), {}, false, {}});
}

Var Tape::parameter(Tensor value) {
  return push(Node{std::move(value), {}, true, {}});
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn) {
  bool needs = false;
  for (const Var& v : inputs) {
    if (v.tape != this) throw ContractError("op mixes variables from different tapes");
    needs = needs || nodes_[v.id].requires_grad;
  }
  return push(Node{std::move(value), {}, needs, needs ? std::move(fn) : BackwardFn{}});
}

Var Tape::record(Tensor value, const std::vector<Var>& inputs, BackwardFn fn) {
  bool needs = false;
  for (const Var& v : inputs) {
    if (v.tape != this) throw ContractError("op mixes variables from different tapes");
    needs = needs || nodes_[v.id].requires_grad;
  }
  return push(Node{std::move(value), {}, needs, needs ? std::move(fn) : BackwardFn{}});
}

const Tensor& Tape::grad(std::size_t id) const {
  const Node& n = nodes_[id];
  if (n.grad.size() != n.value.size()) {
    throw ContractError("no gradient recorded for node " + std::to_string(id));
  }
  return n.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw ContractError("backward on foreign variable");
  if (nodes_[loss.id].value.size() != 1) {
    throw ContractError("backward needs a scalar loss, got shape " +
                        shape_string(nodes_[loss.id].value.shape()));
  }
  for (Node& n : nodes_) {
    if (n.requires_grad) {
      n.grad = Tensor(n.value.shape(), 0.0);
    } else {
      n.grad = Tensor();
    }
  }
  visits_ = 0;
  if (!nodes_[loss.id].requires_grad) return;
  nodes_[loss.id].grad[0] = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.backward) {
      n.backward(*this, i);
      ++visits_;
    }
  }
}

}  // namespace drfl::numkernel
