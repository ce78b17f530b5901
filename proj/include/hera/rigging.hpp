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

#include "hera/hybrid.hpp"

namespace hera {

/// Facets with area at or below this (m^2) have no frame.
inline constexpr double kMinFacetArea = 1e-12;

/// Local coordinate system of one facet. Columns of `rotation` are the first
/// edge direction, the normal, and their cross product.
template <typename T> struct FacetFrame {
  Mat3<T> rotation = Mat3<T>::Identity();
  Vec4<T> quaternion = Vec4<T>(T(1), T(0), T(0), T(0));
  Vec3<T> center = Vec3<T>::Zero();
  T scale = T(1);  ///< mean edge length
};

/// A splat expressed in the frame of `facet_id`. Position and log-scale are
/// in units of the facet's mean edge length.
template <typename T> struct RiggedSplat {
  std::uint32_t facet_id = 0;
  Vec3<T> local_position = Vec3<T>::Zero();
  Vec4<T> local_rotation = Vec4<T>(T(1), T(0), T(0), T(0));
  Vec3<T> local_log_scale = Vec3<T>::Zero();
  T opacity_logit = T(0);
  SHColor<T> color;

  template <typename U> RiggedSplat<U> cast() const {
    RiggedSplat<U> r;
    r.facet_id = facet_id;
    r.local_position = local_position.template cast<U>();
    r.local_rotation = local_rotation.template cast<U>();
    r.local_log_scale = local_log_scale.template cast<U>();
    r.opacity_logit = U(opacity_logit);
    r.color = color.template cast<U>();
    return r;
  }
};

template <typename T>
std::optional<FacetFrame<T>> try_facet_frame(std::span<const Vec3<T>> vertices,
                                             const std::array<std::uint32_t, 3>& facet) {
  const Vec3<T>& v0 = vertices[facet[0]];
  const Vec3<T>& v1 = vertices[facet[1]];
  const Vec3<T>& v2 = vertices[facet[2]];
  const Vec3<T> e0 = v1 - v0;
  const Vec3<T> e1 = v2 - v1;
  const Vec3<T> e2 = v0 - v2;
  const Vec3<T> cross = e0.cross(v2 - v0);
  if (!(T(0.5) * cross.norm() > T(kMinFacetArea))) return std::nullopt;
  FacetFrame<T> f;
  const Vec3<T> a = e0.normalized();
  const Vec3<T> n = cross.normalized();
  f.rotation.col(0) = a;
  f.rotation.col(1) = n;
  f.rotation.col(2) = a.cross(n);
  f.quaternion = matrix_to_quaternion(f.rotation);
  f.center = (v0 + v1 + v2) / T(3);
  f.scale = (e0.norm() + e1.norm() + e2.norm()) / T(3);
  return f;
}

template <typename T>
FacetFrame<T> facet_frame(std::span<const Vec3<T>> vertices,
                          std::span<const std::array<std::uint32_t, 3>> facets, std::size_t i) {
  if (i >= facets.size()) throw Error(ErrorCode::InvalidParameter, "facet index out of range");
  for (auto v : facets[i])
    if (v >= vertices.size()) throw Error(ErrorCode::InvalidParameter, "facet vertex out of range");
  auto f = try_facet_frame<T>(vertices, facets[i]);
  if (!f) throw Error(ErrorCode::DegenerateFacet, "facet " + std::to_string(i) + " has zero area");
  return *f;
}

template <typename T>
GaussianSplat<T> pose_splat(const RiggedSplat<T>& r, const FacetFrame<T>& frame) {
  GaussianSplat<T> g;
  g.position = frame.rotation * (frame.scale * r.local_position) + frame.center;
  g.rotation = quaternion_multiply(frame.quaternion, r.local_rotation);
  g.log_scale = r.local_log_scale + Vec3<T>::Constant(std::log(frame.scale));
  g.opacity_logit = r.opacity_logit;
  g.color = r.color;
  return g;
}

template <typename T>
RiggedSplat<T> bind_splat(const GaussianSplat<T>& g, const FacetFrame<T>& frame, std::uint32_t facet_id) {
  RiggedSplat<T> r;
  r.facet_id = facet_id;
  r.local_position = frame.rotation.transpose() * (g.position - frame.center) / frame.scale;
  r.local_rotation = quaternion_multiply(quaternion_conjugate(frame.quaternion), g.rotation);
  r.local_log_scale = g.log_scale - Vec3<T>::Constant(std::log(frame.scale));
  r.opacity_logit = g.opacity_logit;
  r.color = g.color;
  return r;
}

/// Pulls world-space splat gradients back to the local parameters.
template <typename T>
void local_gradient(const FacetFrame<T>& frame, const Vec3<T>& d_position, const Vec4<T>& d_rotation,
                    Vec3<T>& d_local_position, Vec4<T>& d_local_rotation) {
  d_local_position = frame.scale * (frame.rotation.transpose() * d_position);
  d_local_rotation = quaternion_left_matrix(frame.quaternion).transpose() * d_rotation;
}

/// What to do with splats bound to a facet that degenerates when posed.
enum class DegeneratePolicy { Hide, Throw };

/// Mesh plus facet-bound splats; the canonical, animatable form of a scene.
template <typename T> struct RiggedScene {
  TexturedMesh<T> mesh;
  std::vector<RiggedSplat<T>> splats;
  Vec3<T> background = Vec3<T>::Zero();

  void validate() const {
    for (const auto& r : splats)
      if (r.facet_id >= mesh.facets.size())
        throw Error(ErrorCode::InvalidParameter, "rigged splat facet out of range");
  }

  template <typename U> RiggedScene<U> cast() const {
    RiggedScene<U> s;
    s.mesh = mesh.template cast<U>();
    for (const auto& r : splats) s.splats.push_back(r.template cast<U>());
    s.background = background.template cast<U>();
    return s;
  }
};

/// Frames of every facet; degenerate facets yield nullopt.
template <typename T>
std::vector<std::optional<FacetFrame<T>>> facet_frames(std::span<const Vec3<T>> vertices,
                                                       std::span<const std::array<std::uint32_t, 3>> facets,
                                                       int threads = 0) {
  std::vector<std::optional<FacetFrame<T>>> frames(facets.size());
  parallel_chunks(facets.size(), threads, [&](int, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) frames[i] = try_facet_frame<T>(vertices, facets[i]);
  });
  return frames;
}

/// Poses every rigged splat on `vertices`, which replace the mesh vertices.
/// Splats on degenerate facets are hidden or rejected per `policy`.
template <typename T>
Scene<T> pose_scene(const RiggedScene<T>& rigged, std::span<const Vec3<T>> vertices,
                    DegeneratePolicy policy = DegeneratePolicy::Hide, int threads = 0) {
  if (vertices.size() != rigged.mesh.vertices.size())
    throw Error(ErrorCode::SizeMismatch, "deformed vertex count differs from the mesh");
  rigged.validate();
  Scene<T> scene;
  scene.mesh = rigged.mesh;
  scene.mesh.vertices.assign(vertices.begin(), vertices.end());
  scene.background = rigged.background;
  const auto frames = facet_frames<T>(vertices, rigged.mesh.facets, threads);
  scene.splats.resize(rigged.splats.size());
  for (const auto& r : rigged.splats)
    if (!frames[r.facet_id] && policy == DegeneratePolicy::Throw)
      throw Error(ErrorCode::DegenerateFacet,
                  "bound facet " + std::to_string(r.facet_id) + " has zero area");
  parallel_chunks(rigged.splats.size(), threads, [&](int, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const auto& r = rigged.splats[i];
      if (const auto& f = frames[r.facet_id]) {
        scene.splats[i] = pose_splat(r, *f);
      } else {
        GaussianSplat<T> g;
        g.position = rigged.mesh.vertices.empty() ? Vec3<T>::Zero() : vertices[rigged.mesh.facets[r.facet_id][0]];
        g.log_scale = r.local_log_scale;
        g.opacity_logit = -std::numeric_limits<T>::infinity();
        g.color = r.color;
        scene.splats[i] = g;
      }
    }
  });
  return scene;
}

template <typename T>
Scene<T> pose_scene(const RiggedScene<T>& rigged, DegeneratePolicy policy = DegeneratePolicy::Hide,
                    int threads = 0) {
  return pose_scene<T>(rigged, rigged.mesh.vertices, policy, threads);
}

/// Binds world splats to the facet with the nearest center.
template <typename T>
RiggedScene<T> rig_to_nearest_facet(const Scene<T>& scene) {
  RiggedScene<T> out;
  out.mesh = scene.mesh;
  out.background = scene.background;
  const auto frames = facet_frames<T>(scene.mesh.vertices, scene.mesh.facets);
  for (const auto& g : scene.splats) {
    std::optional<std::uint32_t> best;
    T best_d = std::numeric_limits<T>::infinity();
    for (std::uint32_t i = 0; i < frames.size(); ++i) {
      if (!frames[i]) continue;
      const T d = (frames[i]->center - g.position).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    if (!best) throw Error(ErrorCode::DegenerateFacet, "mesh has no valid facet to bind to");
    out.splats.push_back(bind_splat(g, *frames[*best], *best));
  }
  return out;
}

}  // namespace hera
