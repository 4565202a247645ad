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

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace robometer {

enum class DType : std::uint8_t { kF32 = 1, kU32 = 2 };

std::size_t dtype_size(DType dtype);

/// N-dimensional row-major array of f32 or u32 elements.
///
/// Serialized layout (all integers little-endian):
///   "TPAK" | u8 version (=1) | u8 dtype | u16 rank | rank x u64 dims | payload
class TensorPack {
 public:
  static TensorPack f32(std::vector<std::uint64_t> dims, std::vector<float> values);
  static TensorPack u32(std::vector<std::uint64_t> dims, std::vector<std::uint32_t> values);

  DType dtype() const;
  std::size_t rank() const { return dims_.size(); }
  const std::vector<std::uint64_t>& dims() const { return dims_; }
  std::size_t element_count() const;

  /// Throws kInvalidArgument when the pack holds the other dtype.
  std::span<const float> f32_values() const;
  std::span<const std::uint32_t> u32_values() const;

  friend bool operator==(const TensorPack&, const TensorPack&) = default;

 private:
  TensorPack(std::vector<std::uint64_t> dims,
             std::variant<std::vector<float>, std::vector<std::uint32_t>> payload);

  std::vector<std::uint64_t> dims_;
  std::variant<std::vector<float>, std::vector<std::uint32_t>> payload_;
};

inline constexpr std::uint8_t kTensorPackVersion = 1;

void write_tensorpack(const TensorPack& pack, std::ostream& out);
void write_tensorpack(const TensorPack& pack, const std::filesystem::path& destination);
TensorPack read_tensorpack(std::istream& in);
TensorPack read_tensorpack(const std::filesystem::path& source);

std::string encode_tensorpack(const TensorPack& pack);
TensorPack decode_tensorpack(const std::string& bytes);

}  // namespace robometer
