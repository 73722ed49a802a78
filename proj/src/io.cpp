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

#include "sfsvd/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <system_error>

namespace sfsvd {
namespace {

constexpr char kMagic[4] = {'S', 'F', 'S', 'V'};

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<std::uint8_t>(u & 0xffu));
    u = static_cast<U>(u >> 8);
  }
}

template <typename T>
T get_le(const std::uint8_t* p) {
  using U = std::make_unsigned_t<T>;
  U u = 0;
  for (std::size_t i = sizeof(T); i-- > 0;) u = static_cast<U>((u << 8) | p[i]);
  return static_cast<T>(u);
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  const std::uint8_t* take(std::uint64_t n, const char* what) {
    if (n > remaining()) {
      std::ostringstream os;
      os << "truncated container: need " << n << " bytes for " << what << ", "
         << remaining() << " left";
      throw BoundsError(pos_, os.str());
    }
    const std::uint8_t* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  template <typename T>
  T read(const char* what) {
    return get_le<T>(take(sizeof(T), what));
  }
  std::uint64_t remaining() const { return bytes_.size() - pos_; }
  std::uint64_t pos() const { return pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::uint64_t pos_ = 0;
};

std::uint64_t checked_count(const std::vector<std::uint64_t>& dims, const std::string& name) {
  std::uint64_t count = 1;
  for (std::uint64_t d : dims) {
    if (d != 0 && count > std::numeric_limits<std::uint64_t>::max() / d) {
      throw FormatError("section '" + name + "': element count overflows");
    }
    count *= d;
  }
  return count;
}

void check_dtype(const Section& s, DType want) {
  if (s.dtype != want) {
    throw FormatError("section '" + s.name + "' has the wrong dtype");
  }
}

void check_section(const Section& s) {
  if (s.name.empty()) throw ContractViolation("container: empty section name");
  if (s.name.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw ContractViolation("container: section name too long: " + s.name.substr(0, 32));
  }
  if (s.dims.size() > std::numeric_limits<std::uint8_t>::max()) {
    throw ContractViolation("container: too many dims in '" + s.name + "'");
  }
  const std::uint64_t count = checked_count(s.dims, s.name);
  if (count > std::numeric_limits<std::uint64_t>::max() / dtype_width(s.dtype) ||
      count * dtype_width(s.dtype) != s.payload.size()) {
    throw ContractViolation("container: payload of '" + s.name + "' does not match its dims");
  }
}

std::uint64_t element_count_of(const std::vector<std::uint64_t>& dims) {
  std::uint64_t c = 1;
  for (auto d : dims) c *= d;
  return c;
}

}  // namespace

std::size_t dtype_width(DType t) {
  switch (t) {
    case DType::f64:
    case DType::i64:
      return 8;
    case DType::raw:
      return 1;
  }
  throw FormatError("unknown dtype");
}

std::uint64_t Section::element_count() const { return element_count_of(dims); }

Section f64_section(std::string name, std::vector<std::uint64_t> dims,
                    std::span<const double> values) {
  Section s{std::move(name), DType::f64, std::move(dims), {}};
  if (element_count_of(s.dims) != values.size()) {
    throw ContractViolation("f64_section: dims do not match value count for '" + s.name + "'");
  }
  s.payload.reserve(values.size() * 8);
  for (double v : values) put_le(s.payload, std::bit_cast<std::uint64_t>(v));
  return s;
}

Section matrix_section(std::string name, const Matrix& m) {
  // Matrix is row-major, so its storage is already the payload order.
  return f64_section(std::move(name),
                     {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())},
                     std::span<const double>(m.data(), static_cast<std::size_t>(m.size())));
}

Section vector_section(std::string name, const Vector& v) {
  return f64_section(std::move(name), {static_cast<std::uint64_t>(v.size())},
                     std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
}

Section i64_section(std::string name, std::vector<std::uint64_t> dims,
                    std::span<const std::int64_t> values) {
  Section s{std::move(name), DType::i64, std::move(dims), {}};
  if (element_count_of(s.dims) != values.size()) {
    throw ContractViolation("i64_section: dims do not match value count for '" + s.name + "'");
  }
  s.payload.reserve(values.size() * 8);
  for (std::int64_t v : values) put_le(s.payload, v);
  return s;
}

Section text_section(std::string name, const std::string& text) {
  Section s{std::move(name), DType::raw, {text.size()}, {}};
  s.payload.assign(text.begin(), text.end());
  return s;
}

std::vector<double> as_f64(const Section& s) {
  check_dtype(s, DType::f64);
  std::vector<double> out(s.payload.size() / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::bit_cast<double>(get_le<std::uint64_t>(s.payload.data() + 8 * i));
  }
  return out;
}

std::vector<std::int64_t> as_i64(const Section& s) {
  check_dtype(s, DType::i64);
  std::vector<std::int64_t> out(s.payload.size() / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = get_le<std::int64_t>(s.payload.data() + 8 * i);
  }
  return out;
}

Matrix as_matrix(const Section& s) {
  if (s.dims.size() != 2) throw FormatError("section '" + s.name + "' is not a matrix");
  const std::vector<double> v = as_f64(s);
  Matrix m(static_cast<Eigen::Index>(s.dims[0]), static_cast<Eigen::Index>(s.dims[1]));
  if (!v.empty()) std::memcpy(m.data(), v.data(), v.size() * sizeof(double));
  return m;
}

Vector as_vector(const Section& s) {
  if (s.dims.size() != 1) throw FormatError("section '" + s.name + "' is not a vector");
  const std::vector<double> v = as_f64(s);
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
  return out;
}

std::string as_text(const Section& s) {
  check_dtype(s, DType::raw);
  return std::string(s.payload.begin(), s.payload.end());
}

const Section* find_section(const Sections& sections, const std::string& name) {
  for (const Section& s : sections) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

const Section& require_section(const Sections& sections, const std::string& name,
                               const std::string& context) {
  const Section* s = find_section(sections, name);
  if (!s) throw FormatError(context + ": missing section '" + name + "'");
  return *s;
}

std::vector<std::uint8_t> encode_container(const Sections& sections) {
  std::set<std::string> seen;
  for (const Section& s : sections) {
    check_section(s);
    if (!seen.insert(s.name).second) throw FormatError("container: duplicate section '" + s.name + "'");
  }
  if (sections.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw ContractViolation("container: too many sections");
  }
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  put_le(out, kContainerVersion);
  put_le(out, static_cast<std::uint32_t>(sections.size()));
  for (const Section& s : sections) {
    put_le(out, static_cast<std::uint16_t>(s.name.size()));
    out.insert(out.end(), s.name.begin(), s.name.end());
    out.push_back(static_cast<std::uint8_t>(s.dtype));
    out.push_back(static_cast<std::uint8_t>(s.dims.size()));
    for (std::uint64_t d : s.dims) put_le(out, d);
    out.insert(out.end(), s.payload.begin(), s.payload.end());
  }
  return out;
}

Sections decode_container(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  const std::uint8_t* magic = r.take(4, "magic");
  if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("container: bad magic");
  const auto version = r.read<std::uint32_t>("version");
  if (version != kContainerVersion) {
    throw FormatError("container: unsupported version " + std::to_string(version));
  }
  const auto count = r.read<std::uint32_t>("section count");
  Sections out;
  std::set<std::string> seen;
  for (std::uint32_t i = 0; i < count; ++i) {
    Section s;
    const auto name_len = r.read<std::uint16_t>("name length");
    const std::uint8_t* name = r.take(name_len, "section name");
    s.name.assign(reinterpret_cast<const char*>(name), name_len);
    if (s.name.empty()) throw FormatError("container: empty section name");
    const auto dtype = r.read<std::uint8_t>("dtype");
    if (dtype > 2) {
      throw FormatError("container: section '" + s.name + "' has unknown dtype " +
                        std::to_string(dtype));
    }
    s.dtype = static_cast<DType>(dtype);
    const auto ndim = r.read<std::uint8_t>("ndim");
    // Bound the dims array by the bytes actually present.
    if (static_cast<std::uint64_t>(ndim) * 8 > r.remaining()) {
      throw BoundsError(r.pos(), "truncated container: dims of '" + s.name + "'");
    }
    s.dims.resize(ndim);
    for (auto& d : s.dims) d = r.read<std::uint64_t>("dim");
    const std::uint64_t elements = checked_count(s.dims, s.name);
    const std::uint64_t width = dtype_width(s.dtype);
    if (elements > std::numeric_limits<std::uint64_t>::max() / width) {
      throw FormatError("section '" + s.name + "': payload length overflows");
    }
    const std::uint8_t* payload = r.take(elements * width, "payload");
    s.payload.assign(payload, payload + elements * width);
    if (!seen.insert(s.name).second) {
      throw FormatError("container: duplicate section '" + s.name + "'");
    }
    out.push_back(std::move(s));
  }
  if (r.remaining() != 0) {
    throw FormatError("container: " + std::to_string(r.remaining()) + " trailing bytes");
  }
  return out;
}

namespace {

void write_bytes_atomic(const std::filesystem::path& path, const char* data, std::size_t size) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    f.write(data, static_cast<std::streamsize>(size));
    f.flush();
    if (!f) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot rename into " + path.string() + ": " + ec.message());
  }
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

}  // namespace

void write_container(const std::filesystem::path& path, const Sections& sections) {
  const std::vector<std::uint8_t> bytes = encode_container(sections);
  write_bytes_atomic(path, reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

Sections read_container(const std::filesystem::path& path) {
  const std::string raw = slurp(path);
  try {
    return decode_container(std::span<const std::uint8_t>(
        reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size()));
  } catch (const BoundsError& e) {
    throw BoundsError(e.offset(), path.string() + ": truncated container");
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  write_bytes_atomic(path, text.data(), text.size());
}

std::string read_text(const std::filesystem::path& path) { return slurp(path); }

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace sfsvd
