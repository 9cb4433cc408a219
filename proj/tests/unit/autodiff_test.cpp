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

#include "drfl/errors.hpp"
#include "drfl/numkernel/gradcheck.hpp"
#include "drfl/numkernel/ops.hpp"
#include "drfl/rng.hpp"

using namespace drfl;
using namespace drfl::numkernel;

namespace {

Tensor random_tensor(Shape s, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(s));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = scale * (2.0 * uniform01(rng) - 1.0);
  return t;
}

void check_unary(Var (*op)(Var), double shift = 0.0) {
  Rng rng(17);
  for (int i = 0; i < 10; ++i) {
    Tensor x = random_tensor({3, 4}, rng, 2.0);
    for (std::size_t k = 0; k < x.size(); ++k) {
      x[k] += shift;
      // Keep clear of kinks at zero.
      if (std::abs(x[k]) < 1e-3) x[k] = 0.5;
    }
    Rng wr(100 + i);
    const Tensor w = random_tensor({3, 4}, wr);
    const auto r = grad_check({x}, [&](Tape& t, std::span<const Var> p) {
      return sum(mul(op(p[0]), t.constant(w)));
    });
    CHECK(r.max_rel_error < 1e-6);
  }
}

}  // namespace

TEST_CASE("dense selects rows and passes biases") {
  Tape tape;
  const Var x = tape.constant(Tensor::matrix({{1, 0}}));
  const Var w = tape.constant(Tensor::matrix({{2, 3}, {5, 7}}));
  const Var b = tape.constant(Tensor::vector({0, 0}));
  CHECK(dense(x, w, b).value() == Tensor::matrix({{2, 3}}));
  const Var z = tape.constant(Tensor::matrix({{0, 0}}));
  CHECK(dense(z, w, tape.constant(Tensor::vector({1, -1}))).value() == Tensor::matrix({{1, -1}}));
}

TEST_CASE("dense rejects mismatched shapes") {
  Tape tape;
  const Var x = tape.constant(Tensor({2, 3}));
  CHECK_THROWS_AS(dense(x, tape.constant(Tensor({2, 2})), tape.constant(Tensor({2}))),
                  ContractError);
  CHECK_THROWS_AS(dense(x, tape.constant(Tensor({3, 2})), tape.constant(Tensor({3}))),
                  ContractError);
}

TEST_CASE("dense gradient of sum matches central differences") {
  Rng rng(5);
  const Tensor x = random_tensor({3, 4}, rng);
  const auto r = grad_check({random_tensor({4, 2}, rng), random_tensor({2}, rng)},
                            [&](Tape& t, std::span<const Var> p) {
                              return sum(dense(t.constant(x), p[0], p[1]));
                            });
  CHECK(r.max_rel_error < 1e-6);
}

TEST_CASE("softmax cross-entropy values") {
  Tape tape;
  const std::vector<int> label{2};
  CHECK(softmax_cross_entropy(tape.constant(Tensor({1, 4}, 0.0)), label).value()[0] ==
        doctest::Approx(std::log(4.0)).epsilon(1e-12));
  const std::vector<int> zero{0};
  const Var sat = softmax_cross_entropy(tape.constant(Tensor::matrix({{1000, 0}})), zero);
  CHECK(std::isfinite(sat.value()[0]));
  CHECK(sat.value()[0] == doctest::Approx(0.0).epsilon(1e-12));
  const std::vector<int> bad{4};
  CHECK_THROWS_AS(softmax_cross_entropy(tape.constant(Tensor({1, 4})), bad), ContractError);
}

TEST_CASE("softmax cross-entropy gradient is (softmax - onehot) / batch") {
  Rng rng(8);
  const std::vector<int> labels{1, 0};
  const auto r = grad_check({random_tensor({2, 3}, rng)}, [&](Tape&, std::span<const Var> p) {
    return softmax_cross_entropy(p[0], labels);
  });
  CHECK(r.max_rel_error < 1e-6);

  Tape tape;
  const Var logits = tape.parameter(Tensor({1, 2}, 0.0));
  const std::vector<int> one{1};
  tape.backward(softmax_cross_entropy(logits, one));
  CHECK(logits.grad()[0] == doctest::Approx(0.5));
  CHECK(logits.grad()[1] == doctest::Approx(-0.5));
}

TEST_CASE("elementwise ops match central differences") {
  check_unary(&sigmoid);
  check_unary(&numkernel::tanh);
  check_unary(&relu);
  check_unary(&elu);
  check_unary(&numkernel::abs);
  check_unary(&square);
  check_unary(&one_minus);
}

TEST_CASE("binary, broadcast and reshaping ops match central differences") {
  Rng rng(21);
  const Tensor w = random_tensor({2, 6}, rng);
  const auto r = grad_check(
      {random_tensor({2, 3}, rng), random_tensor({3, 4}, rng), random_tensor({2, 4}, rng),
       random_tensor({4}, rng)},
      [&](Tape& t, std::span<const Var> p) {
        Var y = add_bias(matmul(p[0], p[1]), p[3]);
        Var z = sub(mul(y, p[2]), scale(add_scalar(p[2], 0.3), 2.0));
        Var stacked = concat_rows({z, y});
        Var flat = reshape(stacked, {2, 8});
        Var picked = gather_cols(reshape(flat, {4, 4}), std::vector<std::size_t>{0, 3, 1, 2});
        return add(sum(mul(reshape(concat_rows({picked, picked, picked}), {2, 6}), t.constant(w))),
                   mean(square(y)));
      });
  CHECK(r.max_rel_error < 1e-6);
}

TEST_CASE("row-wise products match central differences") {
  Rng rng(22);
  const Tensor w = random_tensor({3, 4}, rng);
  const auto r = grad_check({random_tensor({3, 2}, rng), random_tensor({3, 8}, rng),
                             random_tensor({3, 4}, rng)},
                            [&](Tape& t, std::span<const Var> p) {
                              Var out = row_matvec(p[0], p[1], 4);
                              return add(sum(row_dot(out, p[2])), sum(mul(out, t.constant(w))));
                            });
  CHECK(r.max_rel_error < 1e-6);
}

TEST_CASE("backward visits each recorded op once and zeroes previous gradients") {
  Tape tape;
  const Var w = tape.parameter(Tensor::vector({1.0, 2.0}));
  const Var y = square(w);
  const Var loss = sum(y);
  tape.backward(loss);
  CHECK(tape.last_backward_visits() == 2);
  CHECK(w.grad() == Tensor::vector({2.0, 4.0}));
  tape.backward(loss);
  CHECK(w.grad() == Tensor::vector({2.0, 4.0}));
  CHECK_THROWS_AS(tape.backward(y), ContractError);
}

TEST_CASE("constants carry no gradient") {
  Tape tape;
  const Var c = tape.constant(Tensor::vector({1.0}));
  const Var p = tape.parameter(Tensor::vector({3.0}));
  tape.backward(sum(mul(c, p)));
  CHECK_FALSE(tape.requires_grad(c.id));
  CHECK(p.grad()[0] == 1.0);
}

TEST_CASE("forward passes are bitwise deterministic") {
  Rng rng(2);
  const Tensor x = random_tensor({8, 5}, rng), w = random_tensor({5, 3}, rng);
  auto run = [&] {
    Tape t;
    return elu(matmul(t.constant(x), t.constant(w))).value();
  };
  CHECK(run() == run());
}
