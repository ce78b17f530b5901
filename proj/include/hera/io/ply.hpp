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

#include "hera/gsplat.hpp"
#include "hera/io/binary.hpp"
#include "hera/io/obj.hpp"

#include <map>

namespace hera::io {

template <typename T> struct SplatFile {
  std::vector<GaussianSplat<T>> splats;
  /// Vertex properties outside the splat layout, such as normals. They are
  /// skipped on load.
  std::size_t ignored_properties = 0;
};

namespace detail {

struct PlyProperty {
  std::string name;
  char kind = 'f';  ///< 'f' float, 'i' signed, 'u' unsigned
  int size = 4;
};

inline bool ply_scalar_type(std::string_view t, PlyProperty& p) {
  static const std::map<std::string_view, std::pair<char, int>> kTypes = {
      {"char", {'i', 1}},   {"int8", {'i', 1}},    {"uchar", {'u', 1}},   {"uint8", {'u', 1}},
      {"short", {'i', 2}},  {"int16", {'i', 2}},   {"ushort", {'u', 2}},  {"uint16", {'u', 2}},
      {"int", {'i', 4}},    {"int32", {'i', 4}},   {"uint", {'u', 4}},    {"uint32", {'u', 4}},
      {"float", {'f', 4}},  {"float32", {'f', 4}}, {"double", {'f', 8}},  {"float64", {'f', 8}}};
  const auto it = kTypes.find(t);
  if (it == kTypes.end()) return false;
  p.kind = it->second.first;
  p.size = it->second.second;
  return true;
}

inline double ply_value(const char* p, const PlyProperty& prop) {
  switch (prop.kind) {
    case 'f': {
      if (prop.size == 4) {
        float v;
        std::memcpy(&v, p, 4);
        return v;
      }
      double v;
      std::memcpy(&v, p, 8);
      return v;
    }
    case 'i': {
      std::int64_t v = 0;
      if (prop.size == 1) v = static_cast<std::int8_t>(*p);
      else if (prop.size == 2) { std::int16_t x; std::memcpy(&x, p, 2); v = x; }
      else { std::int32_t x; std::memcpy(&x, p, 4); v = x; }
      return double(v);
    }
    default: {
      std::uint64_t v = 0;
      std::memcpy(&v, p, prop.size);
      return double(v);
    }
  }
}

}  // namespace detail

/// Parses a binary little-endian PLY with the 3DGS vertex layout. The
/// f_rest count selects the SH degree; missing higher coefficients are zero.
template <typename T = float>
SplatFile<T> parse_splats(std::string_view bytes, const std::string& name = "<ply>") {
  std::size_t header_end = bytes.find("end_header\n");
  if (bytes.substr(0, 4) != "ply\n" && bytes.substr(0, 5) != "ply\r\n")
    throw Error(ErrorCode::ParseError, name + ": missing 'ply' magic");
  if (header_end == std::string_view::npos || header_end > (1u << 20))
    throw Error(ErrorCode::ParseError, name + ": missing end_header");
  const std::string_view header = bytes.substr(0, header_end);
  const std::size_t data_begin = header_end + std::string_view("end_header\n").size();

  std::vector<detail::PlyProperty> props;
  std::size_t vertex_count = 0;
  bool format_seen = false, in_vertex = false, vertex_seen = false;
  std::size_t line_no = 0, pos = 0;
  while (pos < header.size()) {
    std::size_t eol = header.find('\n', pos);
    if (eol == std::string_view::npos) eol = header.size();
    const auto tok = detail::split_ws(header.substr(pos, eol - pos));
    pos = eol + 1;
    ++line_no;
    const std::string where = detail::at_line(name, line_no);
    if (tok.empty() || tok[0] == "ply" || tok[0] == "comment" || tok[0] == "obj_info") continue;
    if (tok[0] == "format") {
      if (tok.size() < 2) throw Error(ErrorCode::ParseError, where + ": bad format line");
      if (tok[1] == "ascii") throw Error(ErrorCode::UnsupportedAscii, name + ": ASCII PLY is not supported");
      if (tok[1] != "binary_little_endian")
        throw Error(ErrorCode::ParseError, where + ": unsupported format '" + std::string(tok[1]) + "'");
      format_seen = true;
    } else if (tok[0] == "element") {
      if (tok.size() != 3) throw Error(ErrorCode::ParseError, where + ": bad element line");
      in_vertex = tok[1] == "vertex";
      if (in_vertex) {
        if (vertex_seen) throw Error(ErrorCode::ParseError, where + ": duplicate vertex element");
        std::uint64_t n = 0;
        const auto [end, ec] = std::from_chars(tok[2].data(), tok[2].data() + tok[2].size(), n);
        if (ec != std::errc() || end != tok[2].data() + tok[2].size())
          throw Error(ErrorCode::ParseError, where + ": bad vertex count");
        vertex_count = n;
        vertex_seen = true;
      } else if (!vertex_seen) {
        throw Error(ErrorCode::ParseError, where + ": element '" + std::string(tok[1]) + "' precedes vertex data");
      }
    } else if (tok[0] == "property") {
      if (!in_vertex) continue;
      detail::PlyProperty p;
      if (tok.size() != 3 || !detail::ply_scalar_type(tok[1], p))
        throw Error(ErrorCode::ParseError, where + ": unsupported vertex property");
      p.name = std::string(tok[2]);
      props.push_back(p);
    } else {
      throw Error(ErrorCode::ParseError, where + ": unknown header keyword '" + std::string(tok[0]) + "'");
    }
  }
  if (!format_seen) throw Error(ErrorCode::ParseError, name + ": missing format line");
  if (!vertex_seen) throw Error(ErrorCode::ParseError, name + ": missing vertex element");

  std::map<std::string, std::size_t> offset_of;
  std::vector<std::size_t> offsets;
  std::size_t record = 0;
  for (const auto& p : props) {
    if (!offset_of.emplace(p.name, offsets.size()).second)
      throw Error(ErrorCode::ParseError, name + ": duplicate property '" + p.name + "'");
    offsets.push_back(record);
    record += p.size;
  }
  auto require = [&](const std::string& prop) {
    const auto it = offset_of.find(prop);
    if (it == offset_of.end()) throw Error(ErrorCode::ParseError, name + ": missing property '" + prop + "'");
    return it->second;
  };
  const char* base_names[] = {"x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2", "opacity", "scale_0", "scale_1",
                              "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"};
  std::size_t base[14];
  for (int i = 0; i < 14; ++i) base[i] = require(base_names[i]);
  std::size_t rest_count = 0;
  while (offset_of.count("f_rest_" + std::to_string(rest_count))) ++rest_count;
  int degree = -1;
  for (int d = 0; d <= kMaxShDegree; ++d)
    if (rest_count == std::size_t(3 * (sh_coeff_count(d) - 1))) degree = d;
  if (degree < 0)
    throw Error(ErrorCode::ParseError, name + ": " + std::to_string(rest_count) + " f_rest properties match no SH degree");
  std::vector<std::size_t> rest(rest_count);
  for (std::size_t k = 0; k < rest_count; ++k) rest[k] = offset_of["f_rest_" + std::to_string(k)];

  SplatFile<T> out;
  out.ignored_properties = props.size() - 14 - rest_count;
  const std::size_t available = bytes.size() - std::min(bytes.size(), data_begin);
  if (record == 0 || vertex_count > available / record) {
    const std::size_t complete = record == 0 ? 0 : available / record;
    throw Error(ErrorCode::ParseError,
                name + ": truncated at splat record " + std::to_string(complete) + " of " + std::to_string(vertex_count));
  }
  const char* data = bytes.data() + data_begin;
  const int n_rest = sh_coeff_count(degree) - 1;
  out.splats.resize(vertex_count);
  for (std::size_t i = 0; i < vertex_count; ++i) {
    const char* r = data + i * record;
    auto get = [&](std::size_t prop) { return T(detail::ply_value(r + offsets[prop], props[prop])); };
    auto& g = out.splats[i];
    g.position = Vec3<T>(get(base[0]), get(base[1]), get(base[2]));
    g.color = SHColor<T>(degree);
    g.color.coeffs[0] = Vec3<T>(get(base[3]), get(base[4]), get(base[5]));
    // f_rest is channel-major: all red coefficients, then green, then blue.
    for (int c = 0; c < 3; ++c)
      for (int j = 0; j < n_rest; ++j) g.color.coeffs[1 + j][c] = get(rest[c * n_rest + j]);
    g.opacity_logit = get(base[6]);
    g.log_scale = Vec3<T>(get(base[7]), get(base[8]), get(base[9]));
    g.rotation = Vec4<T>(get(base[10]), get(base[11]), get(base[12]), get(base[13]));
  }
  return out;
}

template <typename T = float> SplatFile<T> load_splats(const std::filesystem::path& path) {
  return parse_splats<T>(read_file(path), path.string());
}

/// Writes float32 records at the highest SH degree present.
template <typename T> std::string format_splats(const std::vector<GaussianSplat<T>>& splats) {
  int degree = 0;
  for (const auto& g : splats) degree = std::max(degree, g.color.degree);
  const int n_rest = sh_coeff_count(degree) - 1;
  std::string out = "ply\nformat binary_little_endian 1.0\nelement vertex " + std::to_string(splats.size()) + "\n";
  for (const char* p : {"x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2"})
    out += std::string("property float ") + p + "\n";
  for (int k = 0; k < 3 * n_rest; ++k) out += "property float f_rest_" + std::to_string(k) + "\n";
  for (const char* p : {"opacity", "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"})
    out += std::string("property float ") + p + "\n";
  out += "end_header\n";
  out.reserve(out.size() + splats.size() * 4 * (14 + 3 * n_rest));
  for (const auto& g : splats) {
    auto put = [&](T v) { append<float>(out, float(v)); };
    for (int k = 0; k < 3; ++k) put(g.position[k]);
    for (int k = 0; k < 3; ++k) put(g.color.coeffs[0][k]);
    for (int c = 0; c < 3; ++c)
      for (int j = 0; j < n_rest; ++j) put(1 + j < g.color.count() ? g.color.coeffs[1 + j][c] : T(0));
    put(g.opacity_logit);
    for (int k = 0; k < 3; ++k) put(g.log_scale[k]);
    for (int k = 0; k < 4; ++k) put(g.rotation[k]);
  }
  return out;
}

template <typename T>
void save_splats(const std::vector<GaussianSplat<T>>& splats, const std::filesystem::path& path) {
  write_file(path, format_splats(splats));
}

}  // namespace hera::io
