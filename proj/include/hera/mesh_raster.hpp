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

// All-layer mesh rasterizer. Every triangle covering a pixel center
// contributes one fragment, front- and back-facing alike, so the output is a
// per-pixel A-buffer of depth-sorted fragments rather than a z-buffer.

#include "hera/geometry.hpp"
#include "hera/mesh.hpp"

#include <span>

namespace hera {

/// Triangles are clipped against this camera-space depth before projection.
inline constexpr double kNearClipDepth = 1e-3;

/// Rows per rasterization band; bands are the unit of parallel work.
inline constexpr int kBandRows = 16;

template <typename T> struct MeshFragment {
  T depth;
  T alpha;
  Vec3<T> color;
  std::uint32_t facet_id;
  Vec2<T> uv;
  Vec3<T> bary;
};

struct RasterDiagnostics {
  std::size_t degenerate_triangles = 0;  ///< zero screen-space area
  std::size_t clipped_triangles = 0;     ///< crossed the near plane
  std::size_t culled_triangles = 0;      ///< entirely in front of the near plane
};

/// Which direction drives the SH evaluation of texture texels.
enum class ViewDirMode {
  PixelRay,     ///< camera ray through the pixel center
  FacetCenter,  ///< camera center to facet centroid, constant per facet
};

/// Per-pixel fragment lists in compressed-row form: fragments of pixel p are
/// fragments[offsets[p], offsets[p + 1]), ascending in (depth, facet_id).
template <typename T> struct FragmentBuffer {
  int width = 0;
  int height = 0;
  std::vector<MeshFragment<T>> fragments;
  std::vector<std::uint32_t> offsets;
  std::vector<T> front_depth;  ///< 0 where no fragment covers the pixel
  RasterDiagnostics diagnostics;

  static FragmentBuffer empty_buffer(int w, int h) {
    FragmentBuffer b;
    b.width = w;
    b.height = h;
    b.offsets.assign(static_cast<std::size_t>(w) * h + 1, 0);
    b.front_depth.assign(static_cast<std::size_t>(w) * h, T(0));
    return b;
  }

  std::span<const MeshFragment<T>> at(std::size_t pixel) const {
    return {fragments.data() + offsets[pixel], fragments.data() + offsets[pixel + 1]};
  }
  std::span<const MeshFragment<T>> at(int x, int y) const {
    return at(static_cast<std::size_t>(y) * width + x);
  }
};

namespace detail {

template <typename T> struct ClipVertex {
  Vec3<T> position;  // camera space
  Vec3<T> bary;      // barycentric coordinates in the source facet
};

template <typename T> struct ScreenTriangle {
  std::array<Vec2<T>, 3> p;
  std::array<T, 3> inv_z;
  std::array<Vec3<T>, 3> bary;
  std::uint32_t facet;
  int x0, x1, y0, y1;  // inclusive pixel bounds
};

template <typename T> T orient(const Vec2<T>& a, const Vec2<T>& b, const Vec2<T>& p) {
  return (b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x());
}

template <typename T> bool lex_less(const Vec2<T>& a, const Vec2<T>& b) {
  return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
}

/// Edge function evaluated from a canonical endpoint order so that the two
/// triangles sharing an edge see exactly negated values.
template <typename T> struct Edge {
  Vec2<T> lo, hi;
  T sign;
  Edge(const Vec2<T>& a, const Vec2<T>& b) {
    if (lex_less(a, b)) {
      lo = a; hi = b; sign = T(1);
    } else {
      lo = b; hi = a; sign = T(-1);
    }
  }
  T eval(const Vec2<T>& p) const { return sign * orient(lo, hi, p); }
  Vec2<T> gradient() const {
    return sign * Vec2<T>(-(hi.y() - lo.y()), hi.x() - lo.x());
  }
};

/// Top-left ownership for pixels exactly on an edge, given the inward
/// edge-function gradient.
template <typename T> bool owns_edge(const Vec2<T>& inward) {
  return inward.y() > T(0) || (inward.y() == T(0) && inward.x() > T(0));
}

/// Clips a triangle to z >= near. Returns the number of polygon vertices.
template <typename T>
int clip_near(const std::array<ClipVertex<T>, 3>& in, T near, std::array<ClipVertex<T>, 4>& out) {
  int n = 0;
  for (int i = 0; i < 3; ++i) {
    const auto& a = in[i];
    const auto& b = in[(i + 1) % 3];
    const bool a_in = a.position.z() >= near;
    const bool b_in = b.position.z() >= near;
    if (a_in) out[n++] = a;
    if (a_in != b_in) {
      const T s = (near - a.position.z()) / (b.position.z() - a.position.z());
      ClipVertex<T> v;
      v.position = a.position + s * (b.position - a.position);
      v.position.z() = near;
      v.bary = a.bary + s * (b.bary - a.bary);
      out[n++] = v;
    }
  }
  return n;
}

}  // namespace detail

template <typename T>
FragmentBuffer<T> rasterize_mesh(const TexturedMesh<T>& mesh, const Camera<T>& camera,
                                 ViewDirMode view_dir_mode = ViewDirMode::PixelRay,
                                 int threads = 0) {
  using detail::ScreenTriangle;
  const int width = camera.width;
  const int height = camera.height;
  FragmentBuffer<T> out = FragmentBuffer<T>::empty_buffer(width, height);
  if (mesh.empty()) return out;
  mesh.validate();

  std::vector<Vec3<T>> cam_vertices(mesh.vertices.size());
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i)
    cam_vertices[i] = camera.to_camera(mesh.vertices[i]);

  const T near = T(kNearClipDepth);
  std::vector<ScreenTriangle<T>> triangles;
  triangles.reserve(mesh.facets.size());
  for (std::uint32_t f = 0; f < mesh.facets.size(); ++f) {
    std::array<detail::ClipVertex<T>, 3> corners;
    bool any_clipped = false;
    bool all_clipped = true;
    for (int k = 0; k < 3; ++k) {
      corners[k].position = cam_vertices[mesh.facets[f][k]];
      corners[k].bary = Vec3<T>::Unit(k);
      const bool behind = corners[k].position.z() < near;
      any_clipped |= behind;
      all_clipped &= behind;
    }
    if (all_clipped) {
      ++out.diagnostics.culled_triangles;
      continue;
    }
    std::array<detail::ClipVertex<T>, 4> poly;
    int count = 3;
    if (any_clipped) {
      ++out.diagnostics.clipped_triangles;
      count = detail::clip_near(corners, near, poly);
    } else {
      std::copy(corners.begin(), corners.end(), poly.begin());
    }
    for (int k = 1; k + 1 < count; ++k) {
      const std::array<int, 3> idx = {0, k, k + 1};
      ScreenTriangle<T> tri;
      tri.facet = f;
      for (int c = 0; c < 3; ++c) {
        const auto& v = poly[idx[c]];
        const T inv_z = T(1) / v.position.z();
        tri.p[c] = Vec2<T>(camera.fx * v.position.x() * inv_z + camera.cx,
                           camera.fy * v.position.y() * inv_z + camera.cy);
        tri.inv_z[c] = inv_z;
        tri.bary[c] = v.bary;
      }
      const T area = detail::Edge<T>(tri.p[0], tri.p[1]).eval(tri.p[2]);
      if (!(std::abs(area) > T(0)) || !std::isfinite(area)) {
        ++out.diagnostics.degenerate_triangles;
        continue;
      }
      const T min_x = std::min({tri.p[0].x(), tri.p[1].x(), tri.p[2].x()});
      const T max_x = std::max({tri.p[0].x(), tri.p[1].x(), tri.p[2].x()});
      const T min_y = std::min({tri.p[0].y(), tri.p[1].y(), tri.p[2].y()});
      const T max_y = std::max({tri.p[0].y(), tri.p[1].y(), tri.p[2].y()});
      const T lo_x = std::max(T(0), std::ceil(min_x - T(0.5)));
      const T hi_x = std::min(T(width - 1), std::floor(max_x - T(0.5)));
      const T lo_y = std::max(T(0), std::ceil(min_y - T(0.5)));
      const T hi_y = std::min(T(height - 1), std::floor(max_y - T(0.5)));
      if (lo_x > hi_x || lo_y > hi_y) continue;
      tri.x0 = static_cast<int>(lo_x);
      tri.x1 = static_cast<int>(hi_x);
      tri.y0 = static_cast<int>(lo_y);
      tri.y1 = static_cast<int>(hi_y);
      triangles.push_back(tri);
    }
  }

  const int band_count = (height + kBandRows - 1) / kBandRows;
  std::vector<std::vector<std::uint32_t>> band_triangles(band_count);
  for (std::uint32_t t = 0; t < triangles.size(); ++t)
    for (int b = triangles[t].y0 / kBandRows; b <= triangles[t].y1 / kBandRows; ++b)
      band_triangles[b].push_back(t);

  const Vec3<T> eye = camera.center();
  std::vector<Vec3<T>> facet_dirs;
  if (view_dir_mode == ViewDirMode::FacetCenter) {
    facet_dirs.resize(mesh.facets.size());
    for (std::size_t f = 0; f < mesh.facets.size(); ++f) {
      const auto& fi = mesh.facets[f];
      const Vec3<T> centroid =
          (mesh.vertices[fi[0]] + mesh.vertices[fi[1]] + mesh.vertices[fi[2]]) / T(3);
      facet_dirs[f] = (centroid - eye).normalized();
    }
  }

  struct Raw {
    std::uint32_t pixel;
    MeshFragment<T> frag;
  };
  std::vector<std::vector<Raw>> band_fragments(band_count);
  parallel_chunks(band_count, threads, [&](int, std::size_t begin, std::size_t end) {
    std::vector<T> coeffs(mesh.texture.channels);
    for (std::size_t b = begin; b < end; ++b) {
      auto& frags = band_fragments[b];
      const int row0 = static_cast<int>(b) * kBandRows;
      const int row1 = std::min(height - 1, row0 + kBandRows - 1);
      for (std::uint32_t t : band_triangles[b]) {
        const auto& tri = triangles[t];
        const detail::Edge<T> e0(tri.p[1], tri.p[2]);
        const detail::Edge<T> e1(tri.p[2], tri.p[0]);
        const detail::Edge<T> e2(tri.p[0], tri.p[1]);
        const T s = e2.eval(tri.p[2]) > T(0) ? T(1) : T(-1);
        const bool own0 = detail::owns_edge<T>(s * e0.gradient());
        const bool own1 = detail::owns_edge<T>(s * e1.gradient());
        const bool own2 = detail::owns_edge<T>(s * e2.gradient());
        for (int y = std::max(tri.y0, row0); y <= std::min(tri.y1, row1); ++y) {
          for (int x = tri.x0; x <= tri.x1; ++x) {
            const Vec2<T> p(T(x) + T(0.5), T(y) + T(0.5));
            const T w0 = s * e0.eval(p);
            const T w1 = s * e1.eval(p);
            const T w2 = s * e2.eval(p);
            if (w0 < T(0) || w1 < T(0) || w2 < T(0)) continue;
            if ((w0 == T(0) && !own0) || (w1 == T(0) && !own1) || (w2 == T(0) && !own2))
              continue;
            const T sum = w0 + w1 + w2;
            const T l0 = w0 / sum * tri.inv_z[0];
            const T l1 = w1 / sum * tri.inv_z[1];
            const T l2 = w2 / sum * tri.inv_z[2];
            const T inv_depth = l0 + l1 + l2;
            Raw r;
            r.pixel = static_cast<std::uint32_t>(y) * width + x;
            r.frag.depth = T(1) / inv_depth;
            Vec3<T> bary = (l0 * tri.bary[0] + l1 * tri.bary[1] + l2 * tri.bary[2]) / inv_depth;
            bary /= bary.sum();
            r.frag.bary = bary;
            r.frag.facet_id = tri.facet;
            frags.push_back(r);
          }
        }
      }
      // Counting sort by pixel, then (depth, facet) within each pixel.
      const std::size_t first = static_cast<std::size_t>(row0) * width;
      std::vector<std::uint32_t> start(static_cast<std::size_t>(row1 - row0 + 1) * width + 1, 0);
      for (const auto& r : frags) ++start[r.pixel - first + 1];
      for (std::size_t i = 1; i < start.size(); ++i) start[i] += start[i - 1];
      std::vector<Raw> sorted(frags.size());
      std::vector<std::uint32_t> next(start.begin(), start.end() - 1);
      for (const auto& r : frags) sorted[next[r.pixel - first]++] = r;
      for (std::size_t i = 0; i + 1 < start.size(); ++i)
        if (start[i + 1] - start[i] > 1)
          std::sort(sorted.begin() + start[i], sorted.begin() + start[i + 1], [](const Raw& a, const Raw& c) {
            if (a.frag.depth != c.frag.depth) return a.frag.depth < c.frag.depth;
            return a.frag.facet_id < c.frag.facet_id;
          });
      frags.swap(sorted);
      for (auto& r : frags) {
        auto& fr = r.frag;
        const auto& corner = mesh.uvs[fr.facet_id];
        fr.uv = fr.bary[0] * corner[0] + fr.bary[1] * corner[1] + fr.bary[2] * corner[2];
        sample_map(mesh.texture, fr.uv, coeffs.data());
        const int px = static_cast<int>(r.pixel % width);
        const int py = static_cast<int>(r.pixel / width);
        const Vec3<T> dir = view_dir_mode == ViewDirMode::PixelRay
                                ? camera.ray_direction(T(px) + T(0.5), T(py) + T(0.5))
                                : facet_dirs[fr.facet_id];
        fr.color = eval_sh(texel_sh(coeffs.data(), mesh.sh_degree), dir);
        fr.alpha = activate_opacity(mesh.opacity_storage, sample_map(mesh.opacity, fr.uv));
      }
    }
  });

  std::size_t total = 0;
  for (const auto& frags : band_fragments) total += frags.size();
  out.fragments.reserve(total);
  for (const auto& frags : band_fragments)
    for (const auto& r : frags) {
      out.fragments.push_back(r.frag);
      ++out.offsets[r.pixel + 1];
    }
  for (std::size_t p = 0; p + 1 < out.offsets.size(); ++p) {
    out.offsets[p + 1] += out.offsets[p];
    if (out.offsets[p + 1] > out.offsets[p])
      out.front_depth[p] = out.fragments[out.offsets[p]].depth;
  }
  return out;
}

/// Nearest mesh depth per pixel, 0 where uncovered.
template <typename T> Image<T> front_depth(const FragmentBuffer<T>& buffer) {
  Image<T> img(buffer.width, buffer.height, 1);
  img.data = buffer.front_depth;
  return img;
}

}  // namespace hera
