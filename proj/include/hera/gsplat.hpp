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

// Tile-binned Gaussian splat preparation. Each visible splat is projected
// once per frame: 2D mean, EWA covariance, activated opacity, and RGB from
// its SH evaluated along the camera-to-mean direction. Splats are binned to
// 16x16 tiles and every bin is ordered by the splat's single camera-space
// depth, which is therefore identical in every tile the splat touches.

#include "hera/geometry.hpp"
#include "hera/sh.hpp"

#include <limits>
#include <span>

namespace hera {

inline constexpr int kTileSize = 16;
inline constexpr double kAlphaCap = 0.99;
inline constexpr double kAlphaSkip = 1.0 / 255.0;
/// Footprint in standard deviations: binning box and evaluation cutoff.
inline constexpr double kSigmaExtent = 3.0;
inline constexpr double kMinSplatRadius = 0.1;
/// Splats whose mean is closer than this are culled.
inline constexpr double kSplatNearDepth = 0.01;

template <typename T> struct GaussianSplat {
  Vec3<T> position = Vec3<T>::Zero();
  Vec4<T> rotation = Vec4<T>(T(1), T(0), T(0), T(0));  ///< (w, x, y, z), normalized on use
  Vec3<T> log_scale = Vec3<T>::Zero();
  T opacity_logit = T(0);
  SHColor<T> color;

  Vec3<T> scale() const { return log_scale.array().exp().matrix(); }
  T opacity() const { return sigmoid(opacity_logit); }

  template <typename U> GaussianSplat<U> cast() const {
    GaussianSplat<U> g;
    g.position = position.template cast<U>();
    g.rotation = rotation.template cast<U>();
    g.log_scale = log_scale.template cast<U>();
    g.opacity_logit = U(opacity_logit);
    g.color = color.template cast<U>();
    return g;
  }
};

/// Per-frame screen-space data of one splat.
template <typename T> struct SplatScreen {
  bool visible = false;
  Vec3<T> cam_mean = Vec3<T>::Zero();
  Vec2<T> mean = Vec2<T>::Zero();
  Mat2<T> cov = Mat2<T>::Identity();
  Mat2<T> conic = Mat2<T>::Identity();
  T depth = T(0);
  T opacity = T(0);
  Vec3<T> rgb = Vec3<T>::Zero();
  Vec3<T> raw_rgb = Vec3<T>::Zero();  ///< before clamping at 0
  Vec3<T> view_dir = Vec3<T>::UnitZ();
  T radius = T(0);  ///< kSigmaExtent * sqrt(largest eigenvalue of cov)
  Vec2<T> extent = Vec2<T>::Zero();  ///< half sizes of the footprint box
  int tile_x0 = 0, tile_x1 = -1, tile_y0 = 0, tile_y1 = -1;  ///< inclusive
};

template <typename T> struct BinEntry {
  std::uint32_t splat_id;
  T depth;
};

/// Per-tile splat lists in compressed-row form, ascending in (depth, id).
template <typename T> struct SplatBins {
  int tiles_x = 0;
  int tiles_y = 0;
  std::vector<std::uint32_t> offsets;
  std::vector<BinEntry<T>> entries;

  std::span<const BinEntry<T>> tile(int tx, int ty) const {
    const std::size_t t = static_cast<std::size_t>(ty) * tiles_x + tx;
    return {entries.data() + offsets[t], entries.data() + offsets[t + 1]};
  }
};

struct SplatDiagnostics {
  std::size_t behind_camera = 0;
  std::size_t too_small = 0;
  std::size_t transparent = 0;
  std::size_t invalid = 0;
};

template <typename T> struct SplatRaster {
  std::vector<SplatScreen<T>> screen;
  SplatBins<T> bins;
  SplatDiagnostics diagnostics;
};

/// Projects one splat. Returns false when the splat is culled.
template <typename T>
bool project_splat(const GaussianSplat<T>& g, const Camera<T>& camera, const Vec3<T>& eye,
                   SplatScreen<T>& s, SplatDiagnostics* diag = nullptr) {
  s = SplatScreen<T>{};
  if (!g.position.allFinite() || !g.rotation.allFinite() || !g.log_scale.allFinite() ||
      std::isnan(g.opacity_logit) || g.rotation.squaredNorm() == T(0)) {
    if (diag) ++diag->invalid;
    return false;
  }
  s.cam_mean = camera.to_camera(g.position);
  if (!(s.cam_mean.z() > T(kSplatNearDepth))) {
    if (diag) ++diag->behind_camera;
    return false;
  }
  s.opacity = g.opacity();
  if (!(s.opacity > T(0))) {
    if (diag) ++diag->transparent;
    return false;
  }
  const Mat3<T> cov3 = covariance_3d<T>(g.rotation.normalized(), g.scale());
  s.cov = project_covariance(camera, g.position, cov3);
  const T det = s.cov.determinant();
  if (!(det > T(0)) || !std::isfinite(det)) {
    if (diag) ++diag->invalid;
    return false;
  }
  s.conic << s.cov(1, 1) / det, -s.cov(0, 1) / det, -s.cov(1, 0) / det, s.cov(0, 0) / det;
  const T mid = T(0.5) * (s.cov(0, 0) + s.cov(1, 1));
  const T lambda_max = mid + std::sqrt(std::max(T(0.1), mid * mid - det));
  s.radius = T(kSigmaExtent) * std::sqrt(lambda_max);
  if (s.radius < T(kMinSplatRadius)) {
    if (diag) ++diag->too_small;
    return false;
  }
  const T inv_z = T(1) / s.cam_mean.z();
  s.mean = Vec2<T>(camera.fx * s.cam_mean.x() * inv_z + camera.cx,
                   camera.fy * s.cam_mean.y() * inv_z + camera.cy);
  s.depth = s.cam_mean.z();
  s.extent = Vec2<T>(T(kSigmaExtent) * std::sqrt(s.cov(0, 0)),
                     T(kSigmaExtent) * std::sqrt(s.cov(1, 1)));
  s.view_dir = (g.position - eye).normalized();
  s.raw_rgb = eval_sh_raw(g.color, s.view_dir);
  s.rgb = s.raw_rgb.cwiseMax(T(0));
  s.visible = true;

  const int tiles_x = (camera.width + kTileSize - 1) / kTileSize;
  const int tiles_y = (camera.height + kTileSize - 1) / kTileSize;
  const T min_x = s.mean.x() - s.extent.x(), max_x = s.mean.x() + s.extent.x();
  const T min_y = s.mean.y() - s.extent.y(), max_y = s.mean.y() + s.extent.y();
  if (max_x < T(0) || max_y < T(0) || !(min_x < T(camera.width)) ||
      !(min_y < T(camera.height)))
    return true;
  s.tile_x0 = std::max(0, static_cast<int>(std::floor(min_x / T(kTileSize))));
  s.tile_x1 = std::min(tiles_x - 1, static_cast<int>(std::floor(max_x / T(kTileSize))));
  s.tile_y0 = std::max(0, static_cast<int>(std::floor(min_y / T(kTileSize))));
  s.tile_y1 = std::min(tiles_y - 1, static_cast<int>(std::floor(max_y / T(kTileSize))));
  return true;
}

template <typename T>
SplatRaster<T> rasterize_splats(std::span<const GaussianSplat<T>> splats, const Camera<T>& camera,
                                int threads = 0) {
  SplatRaster<T> out;
  out.screen.resize(splats.size());
  const Vec3<T> eye = camera.center();
  const int workers = effective_workers(splats.size(), threads);
  std::vector<SplatDiagnostics> diags(workers);
  parallel_chunks(splats.size(), threads, [&](int w, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) project_splat(splats[i], camera, eye, out.screen[i], &diags[w]);
  });
  for (const auto& d : diags) {
    out.diagnostics.behind_camera += d.behind_camera;
    out.diagnostics.too_small += d.too_small;
    out.diagnostics.transparent += d.transparent;
    out.diagnostics.invalid += d.invalid;
  }

  auto& bins = out.bins;
  bins.tiles_x = (camera.width + kTileSize - 1) / kTileSize;
  bins.tiles_y = (camera.height + kTileSize - 1) / kTileSize;
  const std::size_t tile_count = static_cast<std::size_t>(bins.tiles_x) * bins.tiles_y;
  bins.offsets.assign(tile_count + 1, 0);
  for (const auto& s : out.screen) {
    if (!s.visible) continue;
    for (int ty = s.tile_y0; ty <= s.tile_y1; ++ty)
      for (int tx = s.tile_x0; tx <= s.tile_x1; ++tx)
        ++bins.offsets[static_cast<std::size_t>(ty) * bins.tiles_x + tx + 1];
  }
  for (std::size_t t = 0; t < tile_count; ++t) bins.offsets[t + 1] += bins.offsets[t];
  bins.entries.resize(bins.offsets[tile_count]);
  std::vector<std::uint32_t> cursor(bins.offsets.begin(), bins.offsets.end() - 1);
  for (std::uint32_t i = 0; i < out.screen.size(); ++i) {
    const auto& s = out.screen[i];
    if (!s.visible) continue;
    for (int ty = s.tile_y0; ty <= s.tile_y1; ++ty)
      for (int tx = s.tile_x0; tx <= s.tile_x1; ++tx)
        bins.entries[cursor[static_cast<std::size_t>(ty) * bins.tiles_x + tx]++] = {i, s.depth};
  }
  parallel_chunks(tile_count, threads, [&](int, std::size_t b, std::size_t e) {
    for (std::size_t t = b; t < e; ++t)
      std::sort(bins.entries.begin() + bins.offsets[t], bins.entries.begin() + bins.offsets[t + 1],
                [](const BinEntry<T>& a, const BinEntry<T>& c) {
                  return a.depth < c.depth || (a.depth == c.depth && a.splat_id < c.splat_id);
                });
  });
  return out;
}

template <typename T>
SplatRaster<T> rasterize_splats(const std::vector<GaussianSplat<T>>& splats, const Camera<T>& camera,
                                int threads = 0) {
  return rasterize_splats(std::span<const GaussianSplat<T>>(splats), camera, threads);
}

/// Squared Mahalanobis distance of image point p from the splat's 2D mean.
template <typename T> T splat_mahalanobis2(const SplatScreen<T>& s, const Vec2<T>& p) {
  const Vec2<T> d = p - s.mean;
  return d.dot(s.conic * d);
}

/// Blending weight at image point p: min(0.99, opacity * exp(-m2 / 2)),
/// zero outside the kSigmaExtent ellipse.
template <typename T>
T gaussian_alpha(const Vec2<T>& mean, const Mat2<T>& conic, T opacity, const Vec2<T>& p) {
  const Vec2<T> d = p - mean;
  const T m2 = d.dot(conic * d);
  if (!(m2 <= T(kSigmaExtent * kSigmaExtent))) return T(0);
  return std::min(T(kAlphaCap), opacity * std::exp(T(-0.5) * m2));
}

template <typename T> T splat_alpha(const SplatScreen<T>& s, const Vec2<T>& p) {
  return gaussian_alpha(s.mean, s.conic, s.opacity, p);
}

}  // namespace hera
