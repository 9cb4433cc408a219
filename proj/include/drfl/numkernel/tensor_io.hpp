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

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>

#include "drfl/numkernel/tensor.hpp"

namespace drfl::numkernel::io {

// Little-endian primitives. Readers throw std::runtime_error on truncation.
void write_u32(std::ostream& os, std::uint32_t v);
void write_u64(std::ostream& os, std::uint64_t v);
void write_f64(std::ostream& os, double v);
void write_i32(std::ostream& os, std::int32_t v);
std::uint32_t read_u32(std::istream& is);
std::uint64_t read_u64(std::istream& is);
double read_f64(std::istream& is);
std::int32_t read_i32(std::istream& is);

void write_magic(std::ostream& os, std::string_view magic);
void expect_magic(std::istream& is, std::string_view magic);

// Tensor record: u32 rank, u64 dims[rank], f64 values[prod(dims)].
void write_tensor(std::ostream& os, const Tensor& t);
Tensor read_tensor(std::istream& is);

void write_tensors(std::ostream& os, std::span<const Tensor> tensors);
ParameterSet read_tensors(std::istream& is, std::size_t count);

}  // namespace drfl::numkernel::io
