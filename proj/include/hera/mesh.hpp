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
#include "hera/sh.hpp"

#include <array>
#include <string>

namespace hera {

/// H x W grid of `channels` values per texel, row-major and interleaved.
/// Texel (i, j) is centered at uv ((i + 0.5) / W, (j + 0.5) / H).
template <typename T> struct TexelMap {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<T> data;

  TexelMap() = default;
  TexelMap(int w, int h, int c, T fill = T(0))
      : width(w), height(h), channels(c),
        data(static_cast<std::size_t>(w) * h * c, fill) {}

  bool empty() const { return width == 0 || height == 0; }
  std::size_t texel_count() const { return static_cast<std::size_t>(width) * height; }
  T* texel(std::size_t index) { return data.data() + index * channels; }
  const T* texel(std::size_t index) const { return data.data() + index * channels; }

  template <typename U> TexelMap<U> cast() const {
    TexelMap<U> out;
    out.width = width;
    out.height = height;
    out.channels = channels;
    out.data.assign(data.begin(), data.end());
    return out;
  }
};

/// Four texel indices and bilinear weights for a uv lookup.
template <typename T> struct BilinearTaps {
  std::array<std::uint32_t, 4> index;
  std::array<T, 4> weight;
};

/// Repeat addressing: uv is wrapped into [0, 1) before interpolation.
template <typename T> BilinearTaps<T> bilinear_taps(int width, int height, const Vec2<T>& uv) {
  const T u = uv.x() - std::floor(uv.x());
  const T v = uv.y() - std::floor(uv.y());
  const T x = u * T(width) - T(0.5);
  const T y = v * T(height) - T(0.5);
  const T fx = std::floor(x);
  const T fy = std::floor(y);
  const T ax = x - fx;
  const T ay = y - fy;
  auto wrap = [](long i, int n) { return static_cast<std::uint32_t>(((i % n) + n) % n); };
  const std::uint32_t x0 = wrap(static_cast<long>(fx), width);
  const std::uint32_t x1 = wrap(static_cast<long>(fx) + 1, width);
  const std::uint32_t y0 = wrap(static_cast<long>(fy), height);
  const std::uint32_t y1 = wrap(static_cast<long>(fy) + 1, height);
  const auto w = static_cast<std::uint32_t>(width);
  return {{y0 * w + x0, y0 * w + x1, y1 * w + x0, y1 * w + x1},
          {(T(1) - ax) * (T(1) - ay), ax * (T(1) - ay), (T(1) - ax) * ay, ax * ay}};
}

/// Bilinear lookup of all channels into `out` (size map.channels).
template <typename T> void sample_map(const TexelMap<T>& map, const Vec2<T>& uv, T* out) {
  const auto taps = bilinear_taps(map.width, map.height, uv);
  for (int c = 0; c < map.channels; ++c) out[c] = T(0);
  for (int k = 0; k < 4; ++k) {
    const T* texel = map.texel(taps.index[k]);
    for (int c = 0; c < map.channels; ++c) out[c] += taps.weight[k] * texel[c];
  }
}

template <typename T> T sample_map(const TexelMap<T>& map, const Vec2<T>& uv) {
  T out = T(0);
  const auto taps = bilinear_taps(map.width, map.height, uv);
  for (int k = 0; k < 4; ++k) out += taps.weight[k] * map.texel(taps.index[k])[0];
  return out;
}

/// How opacity-map texels become alpha.
enum class OpacityStorage {
  Logit,  ///< alpha = sigmoid(bilinear(logits))
  Clamp,  ///< alpha = clamp(bilinear(values), 0, 1), for imported [0,1] maps
};

template <typename T> T activate_opacity(OpacityStorage storage, T value) {
  return storage == OpacityStorage::Logit ? sigmoid(value)
                                          : std::clamp(value, T(0), T(1));
}

/// Triangle mesh with an SH texture map and an opacity map sharing one uv
/// parameterization. uv coordinates are stored per facet corner.
template <typename T> struct TexturedMesh {
  std::vector<Vec3<T>> vertices;
  std::vector<std::array<std::uint32_t, 3>> facets;
  std::vector<std::array<Vec2<T>, 3>> uvs;
  int sh_degree = 1;
  TexelMap<T> texture;  ///< 3 * (sh_degree + 1)^2 channels, coefficient-major
  TexelMap<T> opacity;  ///< 1 channel
  OpacityStorage opacity_storage = OpacityStorage::Logit;

  bool empty() const { return facets.empty(); }

  void validate() const {
    if (uvs.size() != facets.size())
      throw Error(ErrorCode::InvalidParameter, "uv corner count does not match facet count");
    for (const auto& f : facets)
      for (auto i : f)
        if (i >= vertices.size())
          throw Error(ErrorCode::InvalidParameter, "facet index out of range");
    for (const auto& corners : uvs)
      for (const auto& uv : corners)
        if (!(uv.x() >= T(0) && uv.x() <= T(1) && uv.y() >= T(0) && uv.y() <= T(1)))
          throw Error(ErrorCode::InvalidParameter, "uv outside [0,1]^2");
    for (const auto& v : vertices)
      if (!v.allFinite()) throw Error(ErrorCode::InvalidParameter, "vertex is not finite");
    if (facets.empty()) return;
    if (sh_degree < 0 || sh_degree > kMaxShDegree)
      throw Error(ErrorCode::InvalidParameter, "texture SH degree out of range");
    if (texture.empty() || opacity.empty())
      throw Error(ErrorCode::InvalidParameter, "mesh has facets but no texture/opacity map");
    if (texture.width != opacity.width || texture.height != opacity.height)
      throw Error(ErrorCode::SizeMismatch, "texture and opacity maps differ in size");
    if (texture.channels != 3 * sh_coeff_count(sh_degree))
      throw Error(ErrorCode::ShapeMismatch, "texture channel count does not match SH degree");
    if (opacity.channels != 1)
      throw Error(ErrorCode::ShapeMismatch, "opacity map must have one channel");
  }

  /// Allocates zero-initialized maps of the given resolution.
  void allocate_maps(int width, int height, int degree) {
    sh_degree = degree;
    texture = TexelMap<T>(width, height, 3 * sh_coeff_count(degree));
    opacity = TexelMap<T>(width, height, 1);
  }

  template <typename U> TexturedMesh<U> cast() const {
    TexturedMesh<U> out;
    out.vertices.reserve(vertices.size());
    for (const auto& v : vertices) out.vertices.push_back(v.template cast<U>());
    out.facets = facets;
    out.uvs.reserve(uvs.size());
    for (const auto& c : uvs)
      out.uvs.push_back({c[0].template cast<U>(), c[1].template cast<U>(), c[2].template cast<U>()});
    out.sh_degree = sh_degree;
    out.texture = texture.template cast<U>();
    out.opacity = opacity.template cast<U>();
    out.opacity_storage = opacity_storage;
    return out;
  }
};

/// Texture texels hold coefficient j of channel c at offset 3 * j + c.
template <typename T>
SHColor<T> texel_sh(const T* texel, int degree) {
  SHColor<T> sh(degree);
  for (int j = 0; j < sh_coeff_count(degree); ++j)
    sh.coeffs[j] = Vec3<T>(texel[3 * j], texel[3 * j + 1], texel[3 * j + 2]);
  return sh;
}

}  // namespace hera
