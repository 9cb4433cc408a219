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

#include "drfl/numkernel/kernels.hpp"

#include <cstdint>

namespace drfl::numkernel::kernels {

namespace {

inline void nn_row(std::size_t i, std::size_t k, std::size_t n, const double* a,
                   const double* b, double* c, bool accumulate) {
  double* ci = c + i * n;
  if (!accumulate) {
    for (std::size_t j = 0; j < n; ++j) ci[j] = 0.0;
  }
  const double* ai = a + i * k;
  for (std::size_t p = 0; p < k; ++p) {
    const double aip = ai[p];
    const double* bp = b + p * n;
    for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
  }
}

inline void tn_row(std::size_t i, std::size_t m, std::size_t k, std::size_t n,
                   const double* a, const double* b, double* c, bool accumulate) {
  double* ci = c + i * n;
  if (!accumulate) {
    for (std::size_t j = 0; j < n; ++j) ci[j] = 0.0;
  }
  for (std::size_t r = 0; r < m; ++r) {
    const double ari = a[r * k + i];
    const double* br = b + r * n;
    for (std::size_t j = 0; j < n; ++j) ci[j] += ari * br[j];
  }
}

inline void nt_row(std::size_t i, std::size_t n, std::size_t k, const double* a,
                   const double* b, double* c, bool accumulate) {
  const double* ai = a + i * n;
  double* ci = c + i * k;
  for (std::size_t q = 0; q < k; ++q) {
    const double* bq = b + q * n;
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += ai[j] * bq[j];
    ci[q] = accumulate ? ci[q] + s : s;
  }
}

}  // namespace

void gemm_nn(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a,
             std::span<const double> b, std::span<double> c, bool accumulate) {
  const auto rows = static_cast<std::int64_t>(m);
#pragma omp parallel for schedule(static) if (m * n * k >= kParallelThreshold)
  for (std::int64_t i = 0; i < rows; ++i) {
    nn_row(static_cast<std::size_t>(i), k, n, a.data(), b.data(), c.data(), accumulate);
  }
}

void gemm_tn(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a,
             std::span<const double> b, std::span<double> c, bool accumulate) {
  const auto rows = static_cast<std::int64_t>(k);
#pragma omp parallel for schedule(static) if (m * n * k >= kParallelThreshold)
  for (std::int64_t i = 0; i < rows; ++i) {
    tn_row(static_cast<std::size_t>(i), m, k, n, a.data(), b.data(), c.data(), accumulate);
  }
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a,
             std::span<const double> b, std::span<double> c, bool accumulate) {
  const auto rows = static_cast<std::int64_t>(m);
#pragma omp parallel for schedule(static) if (m * n * k >= kParallelThreshold)
  for (std::int64_t i = 0; i < rows; ++i) {
    nt_row(static_cast<std::size_t>(i), n, k, a.data(), b.data(), c.data(), accumulate);
  }
}

namespace serial {

void gemm_nn(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a,
             std::span<const double> b, std::span<double> c, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) nn_row(i, k, n, a.data(), b.data(), c.data(), accumulate);
}

void gemm_tn(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a,
             std::span<const double> b, std::span<double> c, bool accumulate) {
  for (std::size_t i = 0; i < k; ++i) tn_row(i, m, k, n, a.data(), b.data(), c.data(), accumulate);
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a,
             std::span<const double> b, std::span<double> c, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) nt_row(i, n, k, a.data(), b.data(), c.data(), accumulate);
}

}  // namespace serial

}  // namespace drfl::numkernel::kernels
