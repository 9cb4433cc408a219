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

#include "drfl/numkernel/tensor_io.hpp"

#include <bit>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace drfl::numkernel::io {

namespace {

template <class U>
void put_le(std::ostream& os, U v) {
  unsigned char buf[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    buf[i] = static_cast<unsigned char>(v >> (8 * i));
  }
  os.write(reinterpret_cast<const char*>(buf), sizeof(U));
}

template <class U>
U get_le(std::istream& is) {
  unsigned char buf[sizeof(U)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(U))) {
    throw std::runtime_error("unexpected end of binary file");
  }
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(buf[i]) << (8 * i);
  return v;
}

}  // namespace

void write_u32(std::ostream& os, std::uint32_t v) { put_le(os, v); }
void write_u64(std::ostream& os, std::uint64_t v) { put_le(os, v); }
void write_f64(std::ostream& os, double v) { put_le(os, std::bit_cast<std::uint64_t>(v)); }
void write_i32(std::ostream& os, std::int32_t v) { put_le(os, std::bit_cast<std::uint32_t>(v)); }
std::uint32_t read_u32(std::istream& is) { return get_le<std::uint32_t>(is); }
std::uint64_t read_u64(std::istream& is) { return get_le<std::uint64_t>(is); }
double read_f64(std::istream& is) { return std::bit_cast<double>(get_le<std::uint64_t>(is)); }
std::int32_t read_i32(std::istream& is) {
  return std::bit_cast<std::int32_t>(get_le<std::uint32_t>(is));
}

void write_magic(std::ostream& os, std::string_view magic) {
  os.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}

void expect_magic(std::istream& is, std::string_view magic) {
  std::string got(magic.size(), '\0');
  if (!is.read(got.data(), static_cast<std::streamsize>(got.size())) || got != magic) {
    throw std::runtime_error("bad file magic, expected '" + std::string(magic) + "'");
  }
}

void write_tensor(std::ostream& os, const Tensor& t) {
  write_u32(os, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.shape()) write_u64(os, d);
  for (double v : t.values()) write_f64(os, v);
}

Tensor read_tensor(std::istream& is) {
  const std::uint32_t rank = read_u32(is);
  if (rank > 8) throw std::runtime_error("implausible tensor rank " + std::to_string(rank));
  Shape shape(rank);
  for (auto& d : shape) d = read_u64(is);
  const std::size_t n = shape_size(shape);
  if (n > (std::size_t{1} << 32)) throw std::runtime_error("implausible tensor size");
  std::vector<double> values(n);
  for (double& v : values) v = read_f64(is);
  return Tensor(std::move(shape), std::move(values));
}

void write_tensors(std::ostream& os, std::span<const Tensor> tensors) {
  for (const Tensor& t : tensors) write_tensor(os, t);
}

ParameterSet read_tensors(std::istream& is, std::size_t count) {
  ParameterSet out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(read_tensor(is));
  return out;
}

}  // namespace drfl::numkernel::io
