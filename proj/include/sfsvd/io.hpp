// Copyright 2026 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Binary tensor container ("SFSV") and small text-file helpers.
//
// Layout, all integers little-endian, no padding:
//
//   "SFSV"  u32 version (= 1)  u32 section_count
//   per section:
//     u16 name_len, name bytes, u8 dtype (0 f64, 1 i64, 2 raw), u8 ndim,
//     ndim x u64 dims, payload (row-major, product(dims) x width bytes)

#pragma once

#include "sfsvd/errors.hpp"
#include "sfsvd/linalg.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace sfsvd {

inline constexpr std::uint32_t kContainerVersion = 1;

enum class DType : std::uint8_t { f64 = 0, i64 = 1, raw = 2 };

std::size_t dtype_width(DType t);

/// Truncated input; offset() is the byte position where more data was needed.
class BoundsError : public FormatError {
 public:
  BoundsError(std::uint64_t offset, const std::string& what)
      : FormatError(what + " at byte offset " + std::to_string(offset)), offset_(offset) {}
  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

struct Section {
  std::string name;
  DType dtype = DType::raw;
  std::vector<std::uint64_t> dims;
  std::vector<std::uint8_t> payload;

  std::uint64_t element_count() const;
  bool operator==(const Section&) const = default;
};

using Sections = std::vector<Section>;

Section f64_section(std::string name, std::vector<std::uint64_t> dims, std::span<const double> values);
Section matrix_section(std::string name, const Matrix& m);
Section vector_section(std::string name, const Vector& v);
Section i64_section(std::string name, std::vector<std::uint64_t> dims,
                    std::span<const std::int64_t> values);
Section text_section(std::string name, const std::string& text);

std::vector<double> as_f64(const Section& s);
std::vector<std::int64_t> as_i64(const Section& s);
Matrix as_matrix(const Section& s);
Vector as_vector(const Section& s);
std::string as_text(const Section& s);

/// Section by name; FormatError naming `context` when absent.
const Section& require_section(const Sections& sections, const std::string& name,
                               const std::string& context);
const Section* find_section(const Sections& sections, const std::string& name);

std::vector<std::uint8_t> encode_container(const Sections& sections);
Sections decode_container(std::span<const std::uint8_t> bytes);

/// Writes to a sibling temporary file and renames it into place.
void write_container(const std::filesystem::path& path, const Sections& sections);
Sections read_container(const std::filesystem::path& path);

void write_text_atomic(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// Shortest-safe decimal form: 17 significant digits.
std::string format_double(double v);

}  // namespace sfsvd
