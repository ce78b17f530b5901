// Copyright 2026 The Hera Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "hera/common.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string_view>

namespace hera::io {

static_assert(std::endian::native == std::endian::little, "file formats assume a little-endian host");

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::IoError, "cannot read '" + path.string() + "'");
  return bytes;
}

inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot create '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
}

/// Bounds-checked little-endian reader over a byte buffer.
class ByteReader {
 public:
  ByteReader(std::string_view bytes, std::string what) : bytes_(bytes), what_(std::move(what)) {}

  std::size_t offset() const { return offset_; }
  std::size_t remaining() const { return bytes_.size() - offset_; }

  std::string_view take(std::size_t n) {
    if (n > remaining()) throw Error(ErrorCode::ParseError, what_ + ": unexpected end of data");
    const auto s = bytes_.substr(offset_, n);
    offset_ += n;
    return s;
  }

  template <typename V> V read() {
    V v;
    std::memcpy(&v, take(sizeof(V)).data(), sizeof(V));
    return v;
  }

 private:
  std::string_view bytes_;
  std::string what_;
  std::size_t offset_ = 0;
};

template <typename V> void append(std::string& out, V v) {
  char buf[sizeof(V)];
  std::memcpy(buf, &v, sizeof(V));
  out.append(buf, sizeof(V));
}

}  // namespace hera::io
