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

// Hybrid mesh + splat compositing.
//
// A splat carries one depth for its whole footprint, while mesh fragments
// carry exact per-pixel depths. Comparing the two per pixel lets a splat sit
// in front of a slanted facet on some pixels and behind it on others. The
// stable ordering instead classifies every splat once per frame by looking
// up the interpolated front mesh depth at the splat's projected mean:
//
//   * mean projects outside the image        -> BehindMesh
//   * any of the four depth taps uncovered   -> DirectCompare
//   * depth < interpolated mesh depth        -> FrontOfMesh, else BehindMesh
//
// Per pixel, a FrontOfMesh splat is still pushed behind the front fragment
// when that fragment is nearer than the splat by more than lambda.

#include "hera/gsplat.hpp"
#include "hera/mesh_raster.hpp"

#include <atomic>
#include <limits>
#include <optional>

namespace hera {

enum class SplatMeshClass : std::uint8_t { FrontOfMesh, BehindMesh, DirectCompare };

template <typename T> struct Classification {
  SplatMeshClass cls = SplatMeshClass::DirectCompare;
  T reference_depth = T(0);  ///< +inf for out-of-image, 0 for DirectCompare
};

enum class SortMode { Stable, Legacy };
enum class PrimitiveMask { Both, MeshOnly, SplatsOnly };
enum class FragmentSource : std::uint8_t { Mesh, Splat };

template <typename T> struct SplatHit {
  std::uint32_t splat_id;
  T alpha;
  Vec3<T> color;
  T depth;
  SplatMeshClass cls;
};

template <typename T> struct HybridFragment {
  T depth;
  T alpha;
  Vec3<T> color;
  FragmentSource source;
  std::uint32_t index;  ///< position in the mesh list or the splat-hit list
};

/// Bilinear lookup of a front-depth image at image point p (pixel centers at
/// +0.5), with edge clamping. Returns nullopt if any tap is uncovered.
template <typename T>
std::optional<T> interpolate_depth(const Image<T>& depth_map, const Vec2<T>& p) {
  const T x = p.x() - T(0.5);
  const T y = p.y() - T(0.5);
  const T fx = std::floor(x);
  const T fy = std::floor(y);
  const T ax = x - fx;
  const T ay = y - fy;
  auto cx = [&](long i) { return static_cast<int>(std::clamp<long>(i, 0, depth_map.width - 1)); };
  auto cy = [&](long i) { return static_cast<int>(std::clamp<long>(i, 0, depth_map.height - 1)); };
  const long ix = static_cast<long>(fx);
  const long iy = static_cast<long>(fy);
  const T d00 = depth_map.at(cx(ix), cy(iy));
  const T d10 = depth_map.at(cx(ix + 1), cy(iy));
  const T d01 = depth_map.at(cx(ix), cy(iy + 1));
  const T d11 = depth_map.at(cx(ix + 1), cy(iy + 1));
  if (d00 == T(0) || d10 == T(0) || d01 == T(0) || d11 == T(0)) return std::nullopt;
  return (T(1) - ax) * (T(1) - ay) * d00 + ax * (T(1) - ay) * d10 + (T(1) - ax) * ay * d01 +
         ax * ay * d11;
}

template <typename T>
Classification<T> classify_splat(const Vec3<T>& mean, T depth, const Image<T>& depth_map,
                                 const Camera<T>& camera) {
  const Projection<T> proj = project_point(camera, mean);
  const Vec2<T>& p = proj.pixel;
  if (!(p.x() >= T(0) && p.x() < T(camera.width) && p.y() >= T(0) && p.y() < T(camera.height)))
    return {SplatMeshClass::BehindMesh, std::numeric_limits<T>::infinity()};
  const auto mesh_depth = interpolate_depth(depth_map, p);
  if (!mesh_depth) return {SplatMeshClass::DirectCompare, T(0)};
  return {depth < *mesh_depth ? SplatMeshClass::FrontOfMesh : SplatMeshClass::BehindMesh,
          *mesh_depth};
}

/// Stable mode: whether a splat hit is composited before the front mesh
/// fragment at depth `front`.
template <typename T> bool splat_precedes_front(T depth, SplatMeshClass cls, T front, T lambda) {
  if (front < depth - lambda) return false;  // per-pixel override
  return cls == SplatMeshClass::FrontOfMesh || (cls == SplatMeshClass::DirectCompare && depth < front);
}

/// Orders one pixel's mesh fragments and splat hits for blending. `mesh`
/// must be ascending in depth and `hits` ascending in (depth, splat_id); in
/// Stable mode only the hits preceding the front fragment and the remaining
/// hits need each be ascending. Appends to `out` (cleared first).
template <typename T>
void merge_fragments(std::span<const MeshFragment<T>> mesh, std::span<const SplatHit<T>> hits,
                     T lambda, SortMode mode, std::vector<HybridFragment<T>>& out) {
  out.clear();
  auto push_mesh = [&](std::size_t i) {
    out.push_back({mesh[i].depth, mesh[i].alpha, mesh[i].color, FragmentSource::Mesh,
                   static_cast<std::uint32_t>(i)});
  };
  auto push_hit = [&](std::size_t i) {
    out.push_back({hits[i].depth, hits[i].alpha, hits[i].color, FragmentSource::Splat,
                   static_cast<std::uint32_t>(i)});
  };

  if (mesh.empty() || mode == SortMode::Legacy) {
    std::size_t m = 0;
    for (std::size_t h = 0; h < hits.size(); ++h) {
      while (m < mesh.size() && mesh[m].depth <= hits[h].depth) push_mesh(m++);
      push_hit(h);
    }
    while (m < mesh.size()) push_mesh(m++);
    return;
  }

  const T front = mesh.front().depth;
  auto precedes_front = [&](const SplatHit<T>& h) { return splat_precedes_front(h.depth, h.cls, front, lambda); };
  for (std::size_t h = 0; h < hits.size(); ++h)
    if (precedes_front(hits[h])) push_hit(h);
  push_mesh(0);
  std::size_t m = 1;
  for (std::size_t h = 0; h < hits.size(); ++h) {
    if (precedes_front(hits[h])) continue;
    while (m < mesh.size() && mesh[m].depth <= hits[h].depth) push_mesh(m++);
    push_hit(h);
  }
  while (m < mesh.size()) push_mesh(m++);
}

template <typename T>
std::vector<HybridFragment<T>> merge_fragments(std::span<const MeshFragment<T>> mesh,
                                               std::span<const SplatHit<T>> hits, T lambda,
                                               SortMode mode = SortMode::Stable) {
  std::vector<HybridFragment<T>> out;
  merge_fragments(mesh, hits, lambda, mode, out);
  return out;
}

/// Stop compositing once transmittance falls below this.
inline constexpr double kMinTransmittance = 1e-4;

template <typename T> struct BlendResult {
  Vec3<T> color;
  T transmittance;   ///< weight given to the background
  std::size_t used;  ///< fragments composited before early exit
};

/// Front-to-back compositing, completed with the background. If `weights`
/// is given it receives alpha_k * prod_{l<k}(1 - alpha_l) for used fragments.
template <typename T>
BlendResult<T> blend_fragments(std::span<const HybridFragment<T>> fragments,
                               const Vec3<T>& background, std::vector<T>* weights = nullptr) {
  Vec3<T> c = Vec3<T>::Zero();
  T transmittance = T(1);
  std::size_t used = 0;
  if (weights) weights->clear();
  for (const auto& f : fragments) {
    const T w = f.alpha * transmittance;
    c += w * f.color;
    if (weights) weights->push_back(w);
    transmittance *= T(1) - f.alpha;
    ++used;
    if (transmittance < T(kMinTransmittance)) break;
  }
  c += transmittance * background;
  return {c, transmittance, used};
}

template <typename T>
Vec3<T> blend(std::span<const HybridFragment<T>> fragments, const Vec3<T>& background) {
  return blend_fragments(fragments, background).color;
}

// ---------------------------------------------------------------------------
// Full pipeline.

template <typename T> struct Scene {
  TexturedMesh<T> mesh;
  std::vector<GaussianSplat<T>> splats;
  Vec3<T> background = Vec3<T>::Zero();

  template <typename U> Scene<U> cast() const {
    Scene<U> s;
    s.mesh = mesh.template cast<U>();
    s.splats.reserve(splats.size());
    for (const auto& g : splats) s.splats.push_back(g.template cast<U>());
    s.background = background.template cast<U>();
    return s;
  }
};

struct RenderOptions {
  double lambda = 0.05;  ///< meters
  SortMode sort_mode = SortMode::Stable;
  PrimitiveMask primitive_mask = PrimitiveMask::Both;
  ViewDirMode view_dir = ViewDirMode::PixelRay;
  double alpha_skip = kAlphaSkip;
  int threads = 0;
};

/// Everything the backward pass needs from a forward render.
template <typename T> struct RenderState {
  bool valid = false;
  std::uint64_t id = 0;  ///< unique per prepare_render call; keys per-tile caches
  Camera<T> camera;
  RenderOptions options;
  Vec3<T> background = Vec3<T>::Zero();
  FragmentBuffer<T> mesh;
  SplatRaster<T> splats;
  std::vector<Classification<T>> classes;
  std::size_t splat_count = 0;
  std::size_t facet_count = 0;

  bool uses_mesh() const { return options.primitive_mask != PrimitiveMask::SplatsOnly; }
  bool uses_splats() const { return options.primitive_mask != PrimitiveMask::MeshOnly; }
};

/// Rasterizes, bins, and classifies without compositing.
template <typename T>
RenderState<T> prepare_render(const Scene<T>& scene, const Camera<T>& camera,
                              const RenderOptions& options) {
  camera.validate();
  static std::atomic<std::uint64_t> next_id{1};
  RenderState<T> state;
  state.id = next_id++;
  state.camera = camera;
  state.options = options;
  state.background = scene.background;
  state.splat_count = scene.splats.size();
  state.facet_count = scene.mesh.facets.size();
  if (state.uses_mesh())
    state.mesh = rasterize_mesh(scene.mesh, camera, options.view_dir, options.threads);
  else
    state.mesh = FragmentBuffer<T>::empty_buffer(camera.width, camera.height);
  if (state.uses_splats()) {
    state.splats = rasterize_splats(scene.splats, camera, options.threads);
    state.classes.assign(scene.splats.size(), Classification<T>{});
    if (state.uses_mesh() && options.sort_mode == SortMode::Stable && !scene.mesh.empty()) {
      const Image<T> depth = front_depth(state.mesh);
      for (std::size_t i = 0; i < scene.splats.size(); ++i) {
        const auto& s = state.splats.screen[i];
        if (s.visible) state.classes[i] = classify_splat(scene.splats[i].position, s.depth, depth, camera);
      }
    }
  } else {
    state.splats.bins.tiles_x = (camera.width + kTileSize - 1) / kTileSize;
    state.splats.bins.tiles_y = (camera.height + kTileSize - 1) / kTileSize;
  }
  state.valid = true;
  return state;
}

/// Splat fields read per pixel, copied once per tile in bin order.
template <typename T> struct TileSplat {
  Vec2<T> mean;
  Mat2<T> conic;
  Vec2<T> extent;
  Vec3<T> rgb;
  T opacity;
  T depth;
  std::uint32_t splat_id;
  SplatMeshClass cls;
};

/// Reusable per-thread buffers for per-pixel work.
template <typename T> struct PixelScratch {
  std::vector<SplatHit<T>> hits;
  std::vector<HybridFragment<T>> merged;
  std::vector<TileSplat<T>> tile;
  std::vector<TileSplat<T>> row;  ///< tile splats whose box spans row_y
  std::uint64_t tile_state = 0;
  std::size_t tile_index = 0;
  int row_y = -1;
};

template <typename T> void load_tile(const RenderState<T>& state, int tx, int ty, PixelScratch<T>& scratch) {
  const std::size_t t = static_cast<std::size_t>(ty) * state.splats.bins.tiles_x + tx;
  if (scratch.tile_state == state.id && scratch.tile_index == t) return;
  scratch.tile.clear();
  for (const auto& e : state.splats.bins.tile(tx, ty)) {
    const auto& s = state.splats.screen[e.splat_id];
    scratch.tile.push_back({s.mean, s.conic, s.extent, s.rgb, s.opacity, e.depth, e.splat_id,
                            state.classes[e.splat_id].cls});
  }
  scratch.tile_state = state.id;
  scratch.tile_index = t;
  scratch.row_y = -1;
}

// The footprint ellipse lies inside its box; the slack covers rounding.
template <typename T> bool outside_box(T offset, T extent) { return std::abs(offset) > T(1.01) * extent; }

template <typename T> void load_row(const RenderState<T>& state, int x, int y, PixelScratch<T>& scratch) {
  const std::size_t t = static_cast<std::size_t>(y / kTileSize) * state.splats.bins.tiles_x + x / kTileSize;
  if (scratch.tile_state == state.id && scratch.tile_index == t && scratch.row_y == y) return;
  load_tile(state, x / kTileSize, y / kTileSize, scratch);
  const T py = T(y) + T(0.5);
  scratch.row.clear();
  for (const auto& s : scratch.tile)
    if (!outside_box(py - s.mean.y(), s.extent.y())) scratch.row.push_back(s);
  scratch.row_y = y;
}

/// Collects the splat hits of one pixel: in Stable mode with mesh coverage,
/// the hits that precede the front mesh fragment come first, each group in
/// bin order; otherwise plain bin order. Stops once the blend would exit,
/// replaying its arithmetic exactly, so the blended prefix of the merged
/// list is unchanged.
template <typename T>
void gather_splat_hits(const RenderState<T>& state, int x, int y, PixelScratch<T>& scratch) {
  auto& hits = scratch.hits;
  hits.clear();
  if (!state.uses_splats()) return;
  load_row(state, x, y, scratch);
  const Vec2<T> p(T(x) + T(0.5), T(y) + T(0.5));
  const T skip = T(state.options.alpha_skip);
  const auto mesh = state.mesh.at(x, y);
  const T lambda = T(state.options.lambda);
  T transmittance = T(1);
  auto occlude = [&](T alpha) {
    transmittance *= T(1) - alpha;
    return transmittance < T(kMinTransmittance);
  };
  auto hit = [&](const TileSplat<T>& s) {
    if (outside_box(p.x() - s.mean.x(), s.extent.x())) return false;
    const T a = gaussian_alpha(s.mean, s.conic, s.opacity, p);
    if (!(a > T(0)) || a < skip) return false;
    hits.push_back({s.splat_id, a, s.rgb, s.depth, s.cls});
    return true;
  };
  // Mesh fragments at or before `depth` in merge order.
  std::size_t m = 0;
  auto mesh_up_to = [&](T depth) {
    for (; m < mesh.size() && mesh[m].depth <= depth; ++m)
      if (occlude(mesh[m].alpha)) return true;
    return false;
  };

  if (mesh.empty() || state.options.sort_mode == SortMode::Legacy) {
    for (const auto& s : scratch.row) {
      if (mesh_up_to(s.depth)) return;
      if (hit(s) && occlude(hits.back().alpha)) return;
    }
    return;
  }
  const T front = mesh.front().depth;
  for (const auto& s : scratch.row)
    if (splat_precedes_front(s.depth, s.cls, front, lambda) && hit(s) && occlude(hits.back().alpha)) return;
  if (occlude(mesh.front().alpha)) return;
  m = 1;
  for (const auto& s : scratch.row) {
    if (splat_precedes_front(s.depth, s.cls, front, lambda)) continue;
    if (mesh_up_to(s.depth)) return;
    if (hit(s) && occlude(hits.back().alpha)) return;
  }
}

/// Builds the ordered fragment list of one pixel into scratch.merged.
template <typename T>
void pixel_fragments(const RenderState<T>& state, int x, int y, PixelScratch<T>& scratch) {
  gather_splat_hits(state, x, y, scratch);
  merge_fragments<T>(state.mesh.at(x, y), scratch.hits, T(state.options.lambda),
                     state.options.sort_mode, scratch.merged);
}

/// Composites a prepared state into an RGB image.
template <typename T> Image<T> composite(const RenderState<T>& state) {
  const int w = state.camera.width;
  const int h = state.camera.height;
  Image<T> img(w, h, 3);
  const int tiles_x = (w + kTileSize - 1) / kTileSize;
  const int tiles_y = (h + kTileSize - 1) / kTileSize;
  parallel_chunks(static_cast<std::size_t>(tiles_x) * tiles_y, state.options.threads,
                  [&](int, std::size_t b, std::size_t e) {
                    PixelScratch<T> scratch;
                    for (std::size_t t = b; t < e; ++t) {
                      const int tx = static_cast<int>(t % tiles_x);
                      const int ty = static_cast<int>(t / tiles_x);
                      for (int y = ty * kTileSize; y < std::min(h, (ty + 1) * kTileSize); ++y)
                        for (int x = tx * kTileSize; x < std::min(w, (tx + 1) * kTileSize); ++x) {
                          pixel_fragments(state, x, y, scratch);
                          const Vec3<T> c =
                              blend<T>(scratch.merged, state.background);
                          img.at(x, y, 0) = c.x();
                          img.at(x, y, 1) = c.y();
                          img.at(x, y, 2) = c.z();
                        }
                    }
                  });
  return img;
}

template <typename T>
Image<T> render(const Scene<T>& scene, const Camera<T>& camera, const RenderOptions& options = {}) {
  return composite(prepare_render(scene, camera, options));
}

template <typename T> struct RenderOutput {
  Image<T> image;
  RenderState<T> state;
};

template <typename T>
RenderOutput<T> render_with_state(const Scene<T>& scene, const Camera<T>& camera,
                                  const RenderOptions& options = {}) {
  RenderOutput<T> out;
  out.state = prepare_render(scene, camera, options);
  out.image = composite(out.state);
  return out;
}

}  // namespace hera
