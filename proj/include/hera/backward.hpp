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

#include "hera/rigging.hpp"

namespace hera {

template <typename T> struct SplatGradient {
  Vec3<T> position = Vec3<T>::Zero();
  Vec4<T> rotation = Vec4<T>::Zero();  ///< with respect to the stored, unnormalized quaternion
  Vec3<T> log_scale = Vec3<T>::Zero();
  T opacity_logit = T(0);
  std::array<Vec3<T>, kMaxShCoeffs> sh{};

  SplatGradient() {
    for (auto& c : sh) c.setZero();
  }
};

template <typename T> struct Gradients {
  std::vector<T> texture;  ///< mirrors mesh.texture.data
  std::vector<T> opacity;  ///< mirrors mesh.opacity.data
  std::vector<SplatGradient<T>> splats;
  /// Norm of d(loss)/d(projected mean) in normalized device units.
  std::vector<T> screen_grad_norm;
  /// Whether the splat contributed to any pixel.
  std::vector<std::uint8_t> touched;
};

/// d(loss)/d(q) for R = quaternion_to_matrix(q) given d(loss)/d(R).
template <typename T> Vec4<T> quaternion_matrix_backward(const Vec4<T>& q, const Mat3<T>& g) {
  const T w = q[0], x = q[1], y = q[2], z = q[3];
  return T(2) * Vec4<T>(-z * g(0, 1) + y * g(0, 2) + z * g(1, 0) - x * g(1, 2) - y * g(2, 0) + x * g(2, 1),
                        y * g(0, 1) + z * g(0, 2) + y * g(1, 0) - T(2) * x * g(1, 1) - w * g(1, 2) +
                            z * g(2, 0) + w * g(2, 1) - T(2) * x * g(2, 2),
                        T(-2) * y * g(0, 0) + x * g(0, 1) + w * g(0, 2) + x * g(1, 0) + z * g(1, 2) -
                            w * g(2, 0) + z * g(2, 1) - T(2) * y * g(2, 2),
                        T(-2) * z * g(0, 0) - w * g(0, 1) + x * g(0, 2) + w * g(1, 0) -
                            T(2) * z * g(1, 1) + y * g(1, 2) + x * g(2, 0) + y * g(2, 1));
}

namespace detail {

/// Per-splat screen-space adjoints gathered over pixels.
template <typename T> struct ScreenAdjoint {
  Vec2<T> mean = Vec2<T>::Zero();
  Mat2<T> conic = Mat2<T>::Zero();
  T opacity = T(0);
  Vec3<T> rgb = Vec3<T>::Zero();
  bool touched = false;
};

template <typename T> struct WorkerAccum {
  std::vector<T> texture;
  std::vector<T> opacity;
  std::vector<ScreenAdjoint<T>> splats;
};

template <typename T>
void splat_backward(const GaussianSplat<T>& g, const SplatScreen<T>& s, const ScreenAdjoint<T>& adj,
                    const Camera<T>& camera, const Vec3<T>& eye, SplatGradient<T>& out) {
  // Color.
  Vec3<T> d_raw;
  for (int c = 0; c < 3; ++c) d_raw[c] = s.raw_rgb[c] > T(0) ? adj.rgb[c] : T(0);
  T basis[kMaxShCoeffs];
  Vec3<T> basis_grad[kMaxShCoeffs];
  sh_basis(g.color.degree, s.view_dir, basis);
  sh_basis_gradient(g.color.degree, s.view_dir, basis_grad);
  Vec3<T> d_dir = Vec3<T>::Zero();
  for (int j = 0; j < g.color.count(); ++j) {
    out.sh[j] += basis[j] * d_raw;
    d_dir += d_raw.dot(g.color.coeffs[j]) * basis_grad[j];
  }
  const Vec3<T> to_mean = g.position - eye;
  const T dist = to_mean.norm();
  out.position += (d_dir - s.view_dir * s.view_dir.dot(d_dir)) / dist;

  // Opacity.
  out.opacity_logit += adj.opacity * s.opacity * (T(1) - s.opacity);

  // Conic -> 2D covariance.
  const Mat2<T> d_cov = -(s.conic * adj.conic * s.conic);

  // 2D covariance -> 3D covariance and projection Jacobian.
  const Vec3<T>& t = s.cam_mean;
  const Mat23<T> jac = projection_jacobian(camera, t);
  const Mat23<T> a = jac * camera.rotation;
  const T inv_norm = T(1) / g.rotation.norm();
  const Vec4<T> qn = g.rotation * inv_norm;
  const Mat3<T> r = quaternion_to_matrix(qn);
  const Vec3<T> scale = g.scale();
  const Mat3<T> m = r * scale.asDiagonal();
  const Mat3<T> sigma = m * m.transpose();
  const Mat3<T> d_sigma = a.transpose() * d_cov * a;
  const Mat23<T> d_a = T(2) * d_cov * a * sigma;
  const Mat23<T> d_jac = d_a * camera.rotation.transpose();

  // 3D covariance -> scale and rotation.
  const Mat3<T> d_m = T(2) * d_sigma * m;
  for (int i = 0; i < 3; ++i) out.log_scale[i] += d_m.col(i).dot(r.col(i)) * scale[i];
  const Mat3<T> d_r = d_m * scale.asDiagonal();
  const Vec4<T> d_qn = quaternion_matrix_backward(qn, d_r);
  out.rotation += (d_qn - qn * qn.dot(d_qn)) * inv_norm;

  // Mean and Jacobian -> camera-space mean -> world mean.
  const T iz = T(1) / t.z();
  const T iz2 = iz * iz;
  const T iz3 = iz2 * iz;
  Vec3<T> d_t;
  d_t.x() = camera.fx * iz * adj.mean.x() - camera.fx * iz2 * d_jac(0, 2);
  d_t.y() = camera.fy * iz * adj.mean.y() - camera.fy * iz2 * d_jac(1, 2);
  d_t.z() = -camera.fx * t.x() * iz2 * adj.mean.x() - camera.fy * t.y() * iz2 * adj.mean.y() -
            camera.fx * iz2 * d_jac(0, 0) + T(2) * camera.fx * t.x() * iz3 * d_jac(0, 2) -
            camera.fy * iz2 * d_jac(1, 1) + T(2) * camera.fy * t.y() * iz3 * d_jac(1, 2);
  out.position += camera.rotation.transpose() * d_t;
}

}  // namespace detail

/// Reverse-mode derivatives of the rendered image with respect to the
/// texture map, opacity map, and every splat parameter, given d(loss)/d(image).
/// Fragment order and classifications from `state` are held fixed.
template <typename T>
Gradients<T> backward_render(const Scene<T>& scene, const RenderState<T>& state, const Image<T>& d_image) {
  if (!state.valid) throw Error(ErrorCode::MissingForwardState, "backward pass needs a forward render state");
  if (state.splat_count != scene.splats.size() || state.facet_count != scene.mesh.facets.size())
    throw Error(ErrorCode::MissingForwardState, "forward state does not match the scene");
  const Camera<T>& camera = state.camera;
  const int w = camera.width, h = camera.height;
  if (d_image.width != w || d_image.height != h || d_image.channels != 3)
    throw Error(ErrorCode::SizeMismatch, "image gradient does not match the render");

  const auto& mesh = scene.mesh;
  const Vec3<T> eye = camera.center();
  std::vector<Vec3<T>> facet_dirs;
  if (state.options.view_dir == ViewDirMode::FacetCenter) {
    facet_dirs.resize(mesh.facets.size());
    for (std::size_t f = 0; f < mesh.facets.size(); ++f) {
      const auto& fi = mesh.facets[f];
      const Vec3<T> centroid = (mesh.vertices[fi[0]] + mesh.vertices[fi[1]] + mesh.vertices[fi[2]]) / T(3);
      facet_dirs[f] = (centroid - eye).normalized();
    }
  }

  const int tiles_x = (w + kTileSize - 1) / kTileSize;
  const int tiles_y = (h + kTileSize - 1) / kTileSize;
  const std::size_t tile_count = static_cast<std::size_t>(tiles_x) * tiles_y;
  const int workers = effective_workers(tile_count, state.options.threads);
  std::vector<detail::WorkerAccum<T>> acc(workers);
  const bool mesh_used = state.uses_mesh() && !mesh.empty();
  const int degree = mesh.sh_degree;
  const int tex_channels = mesh.texture.channels;

  parallel_chunks(tile_count, state.options.threads, [&](int worker, std::size_t b, std::size_t e) {
    auto& a = acc[worker];
    if (mesh_used) {
      a.texture.assign(mesh.texture.data.size(), T(0));
      a.opacity.assign(mesh.opacity.data.size(), T(0));
    }
    a.splats.assign(scene.splats.size(), {});
    PixelScratch<T> scratch;
    std::vector<T> trans;
    T basis[kMaxShCoeffs];
    std::vector<T> coeffs(std::max(tex_channels, 1));
    for (std::size_t tile = b; tile < e; ++tile) {
      const int tx = static_cast<int>(tile % tiles_x);
      const int ty = static_cast<int>(tile / tiles_x);
      for (int y = ty * kTileSize; y < std::min(h, (ty + 1) * kTileSize); ++y)
        for (int x = tx * kTileSize; x < std::min(w, (tx + 1) * kTileSize); ++x) {
          const Vec3<T> g(d_image.at(x, y, 0), d_image.at(x, y, 1), d_image.at(x, y, 2));
          if (g.isZero()) continue;
          pixel_fragments(state, x, y, scratch);
          const auto& frags = scratch.merged;
          // Forward replay: transmittance in front of each used fragment.
          trans.clear();
          T tr = T(1);
          for (const auto& f : frags) {
            trans.push_back(tr);
            tr *= T(1) - f.alpha;
            if (tr < T(kMinTransmittance)) break;
          }
          const auto mesh_frags = state.mesh.at(x, y);
          const Vec2<T> p(T(x) + T(0.5), T(y) + T(0.5));
          // Reverse sweep: behind is the normalized color of everything after k.
          Vec3<T> behind = state.background;
          for (std::size_t k = trans.size(); k-- > 0;) {
            const auto& f = frags[k];
            const T t_k = trans[k];
            const Vec3<T> d_color = g * (f.alpha * t_k);
            const T d_alpha = g.dot(t_k * (f.color - behind));
            behind = f.alpha * f.color + (T(1) - f.alpha) * behind;
            if (f.source == FragmentSource::Mesh) {
              const auto& mf = mesh_frags[f.index];
              const Vec3<T> dir = state.options.view_dir == ViewDirMode::PixelRay
                                      ? camera.ray_direction(p.x(), p.y())
                                      : facet_dirs[mf.facet_id];
              Vec3<T> d_raw;
              for (int c = 0; c < 3; ++c) d_raw[c] = mf.color[c] > T(0) ? d_color[c] : T(0);
              sh_basis(degree, dir, basis);
              const auto taps = bilinear_taps(mesh.texture.width, mesh.texture.height, mf.uv);
              T d_value;
              if (mesh.opacity_storage == OpacityStorage::Logit) {
                d_value = d_alpha * mf.alpha * (T(1) - mf.alpha);
              } else {
                const T v = sample_map(mesh.opacity, mf.uv);
                d_value = (v > T(0) && v < T(1)) ? d_alpha : T(0);
              }
              for (int q = 0; q < 4; ++q) {
                T* texel = a.texture.data() + static_cast<std::size_t>(taps.index[q]) * tex_channels;
                for (int j = 0; j < sh_coeff_count(degree); ++j)
                  for (int c = 0; c < 3; ++c) texel[3 * j + c] += taps.weight[q] * basis[j] * d_raw[c];
                a.opacity[taps.index[q]] += taps.weight[q] * d_value;
              }
            } else {
              const auto& hit = scratch.hits[f.index];
              const auto& s = state.splats.screen[hit.splat_id];
              auto& adj = a.splats[hit.splat_id];
              adj.touched = true;
              adj.rgb += d_color;
              const Vec2<T> d = p - s.mean;
              const T gauss = std::exp(T(-0.5) * d.dot(s.conic * d));
              if (s.opacity * gauss >= T(kAlphaCap)) continue;  // clamped alpha
              adj.opacity += d_alpha * gauss;
              const T d_m2 = d_alpha * T(-0.5) * f.alpha;
              adj.mean += d_m2 * T(-2) * (s.conic * d);
              adj.conic += d_m2 * (d * d.transpose());
            }
          }
        }
    }
  });

  Gradients<T> out;
  out.texture.assign(mesh.texture.data.size(), T(0));
  out.opacity.assign(mesh.opacity.data.size(), T(0));
  out.splats.assign(scene.splats.size(), SplatGradient<T>{});
  out.screen_grad_norm.assign(scene.splats.size(), T(0));
  out.touched.assign(scene.splats.size(), 0);
  std::vector<detail::ScreenAdjoint<T>> adj(scene.splats.size());
  for (const auto& a : acc) {
    for (std::size_t i = 0; i < a.texture.size(); ++i) out.texture[i] += a.texture[i];
    for (std::size_t i = 0; i < a.opacity.size(); ++i) out.opacity[i] += a.opacity[i];
    for (std::size_t i = 0; i < a.splats.size(); ++i) {
      adj[i].mean += a.splats[i].mean;
      adj[i].conic += a.splats[i].conic;
      adj[i].opacity += a.splats[i].opacity;
      adj[i].rgb += a.splats[i].rgb;
      adj[i].touched = adj[i].touched || a.splats[i].touched;
    }
  }
  parallel_chunks(scene.splats.size(), state.options.threads, [&](int, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      if (!adj[i].touched) continue;
      out.touched[i] = 1;
      detail::splat_backward(scene.splats[i], state.splats.screen[i], adj[i], camera, eye, out.splats[i]);
      const Vec2<T> ndc(adj[i].mean.x() * T(w) / T(2), adj[i].mean.y() * T(h) / T(2));
      out.screen_grad_norm[i] = ndc.norm();
    }
  });
  return out;
}

/// Converts world-space splat gradients into gradients of the rigged
/// parameters, using the frames the splats were posed with.
template <typename T>
std::vector<SplatGradient<T>> rigged_gradients(const std::vector<RiggedSplat<T>>& rigged,
                                               const std::vector<std::optional<FacetFrame<T>>>& frames,
                                               const std::vector<SplatGradient<T>>& world) {
  if (rigged.size() != world.size())
    throw Error(ErrorCode::ShapeMismatch, "gradient count does not match splat count");
  std::vector<SplatGradient<T>> out(world.size());
  for (std::size_t i = 0; i < world.size(); ++i) {
    const auto& f = frames[rigged[i].facet_id];
    if (!f) continue;
    out[i] = world[i];
    local_gradient(*f, world[i].position, world[i].rotation, out[i].position, out[i].rotation);
  }
  return out;
}

}  // namespace hera
