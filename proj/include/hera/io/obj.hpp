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

#include "hera/io/binary.hpp"
#include "hera/mesh.hpp"

#include <charconv>

namespace hera::io {

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t b = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > b) out.push_back(line.substr(b, i - b));
  }
  return out;
}

inline std::string at_line(const std::string& name, std::size_t line) {
  return name + ":" + std::to_string(line);
}

template <typename T> T parse_number(std::string_view s, const std::string& where) {
  T v{};
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || !std::isfinite(double(v)))
    throw Error(ErrorCode::ParseError, where + ": bad number '" + std::string(s) + "'");
  return v;
}

/// Resolves a 1-based or negative OBJ index against `count` entries.
inline std::uint32_t resolve_index(std::string_view s, std::size_t count, const std::string& where) {
  long long i = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), i);
  if (ec != std::errc() || end != s.data() + s.size() || i == 0)
    throw Error(ErrorCode::ParseError, where + ": bad index '" + std::string(s) + "'");
  const long long n = static_cast<long long>(count);
  const long long r = i > 0 ? i - 1 : n + i;
  if (r < 0 || r >= n) throw Error(ErrorCode::ParseError, where + ": index " + std::string(s) + " out of range");
  return static_cast<std::uint32_t>(r);
}

template <typename T> void append_number(std::string& out, T v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, end);
}

}  // namespace detail

/// Parses OBJ text into a mesh without maps. Polygons are fan-triangulated
/// and every corner must reference a `vt` record.
template <typename T = float>
TexturedMesh<T> parse_obj(std::string_view text, const std::string& name = "<obj>") {
  TexturedMesh<T> mesh;
  std::vector<Vec2<T>> vts;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto tok = detail::split_ws(line);
    if (tok.empty()) continue;
    const std::string where = detail::at_line(name, line_no);
    if (tok[0] == "v") {
      if (tok.size() < 4) throw Error(ErrorCode::ParseError, where + ": vertex needs 3 coordinates");
      mesh.vertices.emplace_back(detail::parse_number<T>(tok[1], where), detail::parse_number<T>(tok[2], where),
                                 detail::parse_number<T>(tok[3], where));
    } else if (tok[0] == "vt") {
      if (tok.size() < 2) throw Error(ErrorCode::ParseError, where + ": texture coordinate needs a value");
      const T u = detail::parse_number<T>(tok[1], where);
      const T v = tok.size() > 2 ? detail::parse_number<T>(tok[2], where) : T(0);
      vts.emplace_back(u, v);
    } else if (tok[0] == "f") {
      if (tok.size() < 4) throw Error(ErrorCode::ParseError, where + ": face needs at least 3 corners");
      std::vector<std::uint32_t> vi, ti;
      for (std::size_t k = 1; k < tok.size(); ++k) {
        const auto s1 = tok[k].find('/');
        if (s1 == std::string_view::npos)
          throw Error(ErrorCode::MissingUVs, where + ": face corner has no texture coordinate");
        const auto rest = tok[k].substr(s1 + 1);
        const auto vt = rest.substr(0, rest.find('/'));
        if (vt.empty()) throw Error(ErrorCode::MissingUVs, where + ": face corner has no texture coordinate");
        vi.push_back(detail::resolve_index(tok[k].substr(0, s1), mesh.vertices.size(), where));
        ti.push_back(detail::resolve_index(vt, vts.size(), where));
      }
      for (std::size_t k = 1; k + 1 < vi.size(); ++k) {
        mesh.facets.push_back({vi[0], vi[k], vi[k + 1]});
        mesh.uvs.push_back({vts[ti[0]], vts[ti[k]], vts[ti[k + 1]]});
      }
    }
  }
  return mesh;
}

template <typename T = float> TexturedMesh<T> load_obj(const std::filesystem::path& path) {
  return parse_obj<T>(read_file(path), path.string());
}

/// Writes vertices, one `vt` per facet corner, and `f v/vt` records.
/// Numbers use the shortest round-trip representation.
template <typename T> std::string format_obj(const TexturedMesh<T>& mesh) {
  std::string out;
  auto vec = [&](const char* tag, auto... values) {
    out += tag;
    ((out += ' ', detail::append_number(out, values)), ...);
    out += '\n';
  };
  for (const auto& v : mesh.vertices) vec("v", v.x(), v.y(), v.z());
  for (const auto& c : mesh.uvs)
    for (const auto& uv : c) vec("vt", uv.x(), uv.y());
  for (std::size_t f = 0; f < mesh.facets.size(); ++f) {
    out += 'f';
    for (int k = 0; k < 3; ++k)
      out += ' ' + std::to_string(mesh.facets[f][k] + 1) + '/' + std::to_string(3 * f + k + 1);
    out += '\n';
  }
  return out;
}

template <typename T> void save_obj(const TexturedMesh<T>& mesh, const std::filesystem::path& path) {
  write_file(path, format_obj(mesh));
}

}  // namespace hera::io
