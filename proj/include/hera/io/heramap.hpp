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

#include "hera/geometry.hpp"
#include "hera/io/binary.hpp"
#include "hera/mesh.hpp"

namespace hera::io {

inline constexpr std::string_view kHeramapMagic = "HERAMAP1";
inline constexpr std::string_view kHerarigMagic = "HERARIG1";

/// Planar float map: channel c holds rows top to bottom, each left to right.
struct PlanarMap {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint32_t channels = 0;
  std::vector<float> planes;
};

/// Layout: "HERAMAP1", u32 width, u32 height, u32 channels, then
/// width * height * channels little-endian float32 values, channel-planar.
inline std::string format_heramap(const PlanarMap& m) {
  std::string out(kHeramapMagic);
  append(out, m.width);
  append(out, m.height);
  append(out, m.channels);
  out.append(reinterpret_cast<const char*>(m.planes.data()), m.planes.size() * sizeof(float));
  return out;
}

inline PlanarMap parse_heramap(std::string_view bytes, const std::string& name = "<heramap>") {
  ByteReader r(bytes, name);
  if (r.take(std::min(bytes.size(), kHeramapMagic.size())) != kHeramapMagic)
    throw Error(ErrorCode::ParseError, name + ": missing HERAMAP1 magic");
  PlanarMap m;
  m.width = r.read<std::uint32_t>();
  m.height = r.read<std::uint32_t>();
  m.channels = r.read<std::uint32_t>();
  const std::uint64_t count = std::uint64_t(m.width) * m.height * m.channels;
  if (count * sizeof(float) != r.remaining())
    throw Error(ErrorCode::ParseError, name + ": payload size does not match " + std::to_string(m.width) + "x" +
                                           std::to_string(m.height) + "x" + std::to_string(m.channels));
  m.planes.resize(count);
  if (count) std::memcpy(m.planes.data(), r.take(count * sizeof(float)).data(), count * sizeof(float));
  return m;
}

template <typename T> PlanarMap to_planar(int width, int height, int channels, const std::vector<T>& interleaved) {
  PlanarMap m;
  m.width = width;
  m.height = height;
  m.channels = channels;
  const std::size_t n = std::size_t(width) * height;
  m.planes.resize(n * channels);
  for (std::size_t i = 0; i < n; ++i)
    for (int c = 0; c < channels; ++c) m.planes[c * n + i] = float(interleaved[i * channels + c]);
  return m;
}

template <typename T> std::vector<T> to_interleaved(const PlanarMap& m) {
  const std::size_t n = std::size_t(m.width) * m.height;
  std::vector<T> out(n * m.channels);
  for (std::size_t i = 0; i < n; ++i)
    for (std::uint32_t c = 0; c < m.channels; ++c) out[i * m.channels + c] = T(m.planes[c * n + i]);
  return out;
}

template <typename T> PlanarMap to_planar(const TexelMap<T>& map) {
  return to_planar(map.width, map.height, map.channels, map.data);
}
template <typename T> PlanarMap to_planar(const Image<T>& img) {
  return to_planar(img.width, img.height, img.channels, img.data);
}

template <typename T = float> TexelMap<T> load_texel_map(const std::filesystem::path& path) {
  const PlanarMap m = parse_heramap(read_file(path), path.string());
  if (m.width > 1u << 16 || m.height > 1u << 16 || m.channels > 1u << 10)
    throw Error(ErrorCode::ParseError, path.string() + ": map dimensions out of range");
  TexelMap<T> out;
  out.width = int(m.width);
  out.height = int(m.height);
  out.channels = int(m.channels);
  out.data = to_interleaved<T>(m);
  return out;
}

template <typename T> void save_texel_map(const TexelMap<T>& map, const std::filesystem::path& path) {
  write_file(path, format_heramap(to_planar(map)));
}

template <typename T> void save_image_heramap(const Image<T>& img, const std::filesystem::path& path) {
  write_file(path, format_heramap(to_planar(img)));
}

/// Layout: "HERARIG1", u32 count, then count u32 facet ids.
inline std::string format_rig(std::span<const std::uint32_t> facet_ids) {
  std::string out(kHerarigMagic);
  append(out, static_cast<std::uint32_t>(facet_ids.size()));
  for (auto f : facet_ids) append(out, f);
  return out;
}

inline std::vector<std::uint32_t> parse_rig(std::string_view bytes, const std::string& name = "<rig>") {
  ByteReader r(bytes, name);
  if (r.take(std::min(bytes.size(), kHerarigMagic.size())) != kHerarigMagic)
    throw Error(ErrorCode::ParseError, name + ": missing HERARIG1 magic");
  const std::uint32_t n = r.read<std::uint32_t>();
  if (std::uint64_t(n) * 4 != r.remaining())
    throw Error(ErrorCode::ParseError, name + ": expected " + std::to_string(n) + " facet ids");
  std::vector<std::uint32_t> ids(n);
  for (auto& f : ids) f = r.read<std::uint32_t>();
  return ids;
}

}  // namespace hera::io
