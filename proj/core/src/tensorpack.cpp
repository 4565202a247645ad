/* Copyright 2026 The Robometer Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "robometer/tensorpack.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "robometer/error.hpp"

namespace robometer {
namespace {

constexpr std::array<char, 4> kMagic = {'T', 'P', 'A', 'K'};
// Refuse headers whose element count could not be allocated anyway.
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 40;

std::uint64_t checked_count(const std::vector<std::uint64_t>& dims) {
  if (dims.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "tensorpack rank must be >= 1");
  }
  if (dims.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw Error(ErrorCode::kInvalidArgument, "tensorpack rank exceeds u16");
  }
  std::uint64_t count = 1;
  for (std::uint64_t d : dims) {
    if (d == 0) throw Error(ErrorCode::kInvalidArgument, "tensorpack dims must be >= 1");
    if (count > kMaxElements / d) {
      throw Error(ErrorCode::kInvalidArgument, "tensorpack dims overflow");
    }
    count *= d;
  }
  return count;
}

template <typename T>
void put_le(std::ostream& out, T value) {
  std::array<char, sizeof(T)> bytes{};
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF);
  }
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T get_le(std::istream& in, const char* what) {
  std::array<unsigned char, sizeof(T)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw Error(ErrorCode::kTruncated, std::string("tensorpack truncated in ") + what);
  }
  std::uint64_t value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  }
  return static_cast<T>(value);
}

}  // namespace

std::size_t dtype_size(DType dtype) {
  switch (dtype) {
    case DType::kF32: return sizeof(float);
    case DType::kU32: return sizeof(std::uint32_t);
  }
  throw Error(ErrorCode::kUnknownDtype, "unknown dtype");
}

TensorPack::TensorPack(std::vector<std::uint64_t> dims,
                       std::variant<std::vector<float>, std::vector<std::uint32_t>> payload)
    : dims_(std::move(dims)), payload_(std::move(payload)) {}

TensorPack TensorPack::f32(std::vector<std::uint64_t> dims, std::vector<float> values) {
  if (checked_count(dims) != values.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "tensorpack payload does not match dims");
  }
  return TensorPack(std::move(dims), std::move(values));
}

TensorPack TensorPack::u32(std::vector<std::uint64_t> dims, std::vector<std::uint32_t> values) {
  if (checked_count(dims) != values.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "tensorpack payload does not match dims");
  }
  return TensorPack(std::move(dims), std::move(values));
}

DType TensorPack::dtype() const {
  return std::holds_alternative<std::vector<float>>(payload_) ? DType::kF32 : DType::kU32;
}

std::size_t TensorPack::element_count() const {
  return std::visit([](const auto& v) { return v.size(); }, payload_);
}

std::span<const float> TensorPack::f32_values() const {
  const auto* v = std::get_if<std::vector<float>>(&payload_);
  if (v == nullptr) throw Error(ErrorCode::kInvalidArgument, "tensorpack is not f32");
  return *v;
}

std::span<const std::uint32_t> TensorPack::u32_values() const {
  const auto* v = std::get_if<std::vector<std::uint32_t>>(&payload_);
  if (v == nullptr) throw Error(ErrorCode::kInvalidArgument, "tensorpack is not u32");
  return *v;
}

void write_tensorpack(const TensorPack& pack, std::ostream& out) {
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint8_t>(out, kTensorPackVersion);
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(pack.dtype()));
  put_le<std::uint16_t>(out, static_cast<std::uint16_t>(pack.rank()));
  for (std::uint64_t d : pack.dims()) put_le<std::uint64_t>(out, d);
  if (pack.dtype() == DType::kF32) {
    for (float v : pack.f32_values()) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  } else {
    for (std::uint32_t v : pack.u32_values()) put_le<std::uint32_t>(out, v);
  }
  if (!out) throw Error(ErrorCode::kIo, "tensorpack write failed");
}

void write_tensorpack(const TensorPack& pack, const std::filesystem::path& destination) {
  std::ofstream out(destination, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open for writing: " + destination.string());
  write_tensorpack(pack, out);
  out.flush();
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + destination.string());
}

TensorPack read_tensorpack(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (in.gcount() != 4) throw Error(ErrorCode::kTruncated, "tensorpack truncated in magic");
  if (magic != kMagic) throw Error(ErrorCode::kBadMagic, "tensorpack bad magic");
  const auto version = get_le<std::uint8_t>(in, "version");
  if (version != kTensorPackVersion) {
    throw Error(ErrorCode::kFormat,
                "tensorpack unsupported version " + std::to_string(version));
  }
  const auto dtype_code = get_le<std::uint8_t>(in, "dtype");
  if (dtype_code != static_cast<std::uint8_t>(DType::kF32) &&
      dtype_code != static_cast<std::uint8_t>(DType::kU32)) {
    throw Error(ErrorCode::kUnknownDtype,
                "tensorpack unknown dtype code " + std::to_string(dtype_code));
  }
  const auto rank = get_le<std::uint16_t>(in, "rank");
  std::vector<std::uint64_t> dims(rank);
  for (auto& d : dims) d = get_le<std::uint64_t>(in, "dims");
  std::uint64_t count = 0;
  try {
    count = checked_count(dims);
  } catch (const Error& e) {
    throw Error(ErrorCode::kFormat, std::string("tensorpack header: ") + e.what());
  }

  std::vector<std::uint32_t> raw(count);
  for (auto& word : raw) word = get_le<std::uint32_t>(in, "payload");
  if (dtype_code == static_cast<std::uint8_t>(DType::kU32)) {
    return TensorPack::u32(std::move(dims), std::move(raw));
  }
  std::vector<float> values(count);
  for (std::size_t i = 0; i < count; ++i) values[i] = std::bit_cast<float>(raw[i]);
  return TensorPack::f32(std::move(dims), std::move(values));
}

TensorPack read_tensorpack(const std::filesystem::path& source) {
  std::ifstream in(source, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open: " + source.string());
  return read_tensorpack(in);
}

std::string encode_tensorpack(const TensorPack& pack) {
  std::ostringstream out(std::ios::binary);
  write_tensorpack(pack, out);
  return std::move(out).str();
}

TensorPack decode_tensorpack(const std::string& bytes) {
  std::istringstream in(bytes, std::ios::binary);
  return read_tensorpack(in);
}

}  // namespace robometer
