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

// Constructed scenes shared by the hybrid, CLI and acceptance tests.

#include "hera/hera.hpp"

namespace hera::testing {

using V3 = Vec3<double>;

struct Quad {
  std::array<V3, 4> corners;
  V3 rgb;
  double opacity;
};

// Degree-0 mesh with one constant-color texel per quad.
inline TexturedMesh<double> make_quads(const std::vector<Quad>& quads,
                                       OpacityStorage storage = OpacityStorage::Clamp) {
  TexturedMesh<double> m;
  const int n = static_cast<int>(quads.size());
  m.allocate_maps(n, 1, 0);
  m.opacity_storage = storage;
  for (int k = 0; k < n; ++k) {
    const auto base = static_cast<std::uint32_t>(m.vertices.size());
    for (const auto& c : quads[k].corners) m.vertices.push_back(c);
    const Vec2<double> uv((k + 0.5) / n, 0.5);
    m.facets.push_back({base, base + 1, base + 2});
    m.facets.push_back({base, base + 2, base + 3});
    m.uvs.push_back({uv, uv, uv});
    m.uvs.push_back({uv, uv, uv});
    for (int ch = 0; ch < 3; ++ch) m.texture.texel(k)[ch] = (quads[k].rgb[ch] - 0.5) / kShC0;
    m.opacity.texel(k)[0] =
        storage == OpacityStorage::Clamp ? quads[k].opacity : logit(quads[k].opacity);
  }
  return m;
}

inline Quad flat_quad(double x0, double x1, double y0, double y1, double z, const V3& rgb, double opacity) {
  return {{V3(x0, y0, z), V3(x1, y0, z), V3(x1, y1, z), V3(x0, y1, z)}, rgb, opacity};
}

inline GaussianSplat<double> iso_splat(const V3& p, double sigma, double logit, const V3& rgb) {
  GaussianSplat<double> g;
  g.position = p;
  g.log_scale = V3::Constant(std::log(sigma));
  g.opacity_logit = logit;
  g.color = SHColor<double>(0);
  g.color.coeffs[0] = (rgb - V3::Constant(0.5)) / kShC0;
  return g;
}

/// Quad tilted from z = 1.8 to 2.2 across x with a splat whose depth lies
/// between the quad's per-pixel depths. Seen by front_camera(64, 64, 64, 0).
inline Scene<double> crossing_scene(OpacityStorage storage = OpacityStorage::Clamp) {
  Scene<double> s;
  s.mesh = make_quads({{{V3(-2, -2, 1.8), V3(2, -2, 2.2), V3(2, 2, 2.2), V3(-2, 2, 1.8)}, V3(0.8, 0.2, 0.2), 0.5}},
                      storage);
  s.splats = {iso_splat(V3(0, 0, 1.985), 0.15, 3.0, V3(0.2, 0.8, 0.2))};
  return s;
}

inline Scene<float> crossing_fixture() { return crossing_scene().cast<float>(); }

/// Mesh step at depths 1.0 and 1.5 with a splat at depth 1.1 whose mean
/// projects onto the far quad, just beside the near one. Seen by
/// front_camera(32, 32, 32, 0); the center pixel lies on the near quad.
inline Scene<double> override_scene(OpacityStorage storage = OpacityStorage::Clamp) {
  Scene<double> s;
  s.mesh = make_quads({flat_quad(-3, 0.125, -3, 3, 1.0, V3(0.9, 0.1, 0.1), 0.9),
                       flat_quad(0.1875, 4, -4, 4, 1.5, V3(0.1, 0.1, 0.9), 0.9)},
                      storage);
  s.splats = {iso_splat(V3(9.0 / 32 * 1.1, 0, 1.1), 10.0 * 1.1 / 32, 6.0, V3(0.1, 0.9, 0.1))};
  return s;
}

inline Scene<float> override_fixture() { return override_scene().cast<float>(); }

}  // namespace hera::testing
