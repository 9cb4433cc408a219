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

#include <sstream>

#include "drfl/errors.hpp"
#include "drfl/numkernel/kernels.hpp"
#include "drfl/numkernel/tensor.hpp"
#include "drfl/numkernel/tensor_io.hpp"
#include "drfl/rng.hpp"

using namespace drfl;
using namespace drfl::numkernel;

TEST_CASE("tensor construction enforces the shape product") {
  const Tensor t({2, 3}, 1.5);
  CHECK(t.size() == 6);
  CHECK(t.rows() == 2);
  CHECK(t.cols() == 3);
  CHECK(t.all_finite());
  CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1, 2, 3}), ContractError);
  const Tensor m = Tensor::matrix({{1, 2}, {3, 4}});
  CHECK(m.at(1, 0) == 3.0);
  CHECK(Tensor::vector({1, 2, 3}).rows() == 1);
  CHECK_THROWS_AS(m.reshaped({3}), ContractError);
  CHECK(m.reshaped({4}).shape() == Shape{4});
}

TEST_CASE("non-finite values are detected") {
  Tensor t({2}, 0.0);
  t[1] = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(t.all_finite());
}

TEST_CASE("parallel kernels match the serial reference bit for bit") {
  Rng rng(3);
  for (std::size_t trial = 0; trial < 6; ++trial) {
    const std::size_t m = 1 + uniform_index(rng, 90), k = 1 + uniform_index(rng, 90),
                      n = 1 + uniform_index(rng, 90);
    std::vector<double> a(m * k), b(k * n), bt(m * n), c1(m * n), c2(m * n);
    for (double& x : a) x = uniform01(rng) - 0.5;
    for (double& x : b) x = uniform01(rng) - 0.5;
    for (double& x : bt) x = uniform01(rng) - 0.5;
    kernels::gemm_nn(m, k, n, a, b, c1, false);
    kernels::serial::gemm_nn(m, k, n, a, b, c2, false);
    CHECK(c1 == c2);
    // a [m x k], bt [m x n] -> [k x n]
    std::vector<double> d1(k * n), d2(k * n);
    kernels::gemm_tn(m, k, n, a, bt, d1, false);
    kernels::serial::gemm_tn(m, k, n, a, bt, d2, false);
    CHECK(d1 == d2);
    // bt [m x n], b^T: b viewed as [k x n] -> [m x k]
    std::vector<double> e1(m * k), e2(m * k);
    kernels::gemm_nt(m, n, k, bt, b, e1, false);
    kernels::serial::gemm_nt(m, n, k, bt, b, e2, false);
    CHECK(e1 == e2);
  }
}

TEST_CASE("gemm computes the textbook product and accumulates on request") {
  const std::vector<double> a{1, 2, 3, 4}, b{5, 6, 7, 8};
  std::vector<double> c(4, 1.0);
  kernels::gemm_nn(2, 2, 2, a, b, c, false);
  CHECK(c == std::vector<double>{19, 22, 43, 50});
  kernels::gemm_nn(2, 2, 2, a, b, c, true);
  CHECK(c == std::vector<double>{38, 44, 86, 100});
}

TEST_CASE("tensor serialization round-trips and rejects bad magic") {
  std::stringstream ss;
  const ParameterSet ps{Tensor::matrix({{1, -2}, {3.25, 4}}), Tensor::vector({0.1})};
  io::write_magic(ss, "TESTMAG1");
  io::write_tensors(ss, ps);
  io::expect_magic(ss, "TESTMAG1");
  CHECK(io::read_tensors(ss, 2) == ps);

  std::stringstream bad("NOTMAGIC");
  CHECK_THROWS(io::expect_magic(bad, "TESTMAG1"));
}
