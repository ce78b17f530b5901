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

#include "hera/common.hpp"

#include <span>
#include <type_traits>

namespace hera {

/// Points with camera-space z at or below this are behind the camera.
inline constexpr double kBehindCameraDepth = 1e-8;

/// Diagonal added to every projected 2D covariance, in pixels squared.
inline constexpr double kCovarianceFloor = 0.3;

/// Pinhole camera. `rotation` and `translation` map world to camera space:
/// p_cam = rotation * p_world + translation. Camera looks down +z, image y
/// grows downward, and pixel (i, j) is sampled at (i + 0.5, j + 0.5).
template <typename T> struct Camera {
  Mat3<T> rotation = Mat3<T>::Identity();
  Vec3<T> translation = Vec3<T>::Zero();
  T fx = T(1);
  T fy = T(1);
  T cx = T(0);
  T cy = T(0);
  int width = 1;
  int height = 1;

  Vec3<T> to_camera(const Vec3<T>& p) const { return rotation * p + translation; }

  /// World-space position of the camera center.
  Vec3<T> center() const { return -(rotation.transpose() * translation); }

  /// Unit world-space direction of the ray through image point (px, py).
  Vec3<T> ray_direction(T px, T py) const {
    const Vec3<T> d((px - cx) / fx, (py - cy) / fy, T(1));
    return (rotation.transpose() * d).normalized();
  }

  void validate() const {
    if (!(fx > T(0)) || !(fy > T(0)))
      throw Error(ErrorCode::InvalidParameter, "focal lengths must be positive");
    if (width < 1 || height < 1)
      throw Error(ErrorCode::InvalidParameter, "image size must be at least 1x1");
    if (!rotation.allFinite() || !translation.allFinite())
      throw Error(ErrorCode::InvalidParameter, "camera pose is not finite");
    const Mat3<T> drift = rotation.transpose() * rotation - Mat3<T>::Identity();
    if (drift.cwiseAbs().maxCoeff() >= T(1e-5))
      throw Error(ErrorCode::NonOrthonormalRotation, "camera rotation is not orthonormal");
  }

  template <typename U> Camera<U> cast() const {
    Camera<U> c;
    c.rotation = rotation.template cast<U>();
    c.translation = translation.template cast<U>();
    c.fx = U(fx);
    c.fy = U(fy);
    c.cx = U(cx);
    c.cy = U(cy);
    c.width = width;
    c.height = height;
    return c;
  }
};

/// Row-major interleaved float image.
template <typename T> struct Image {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<T> data;

  Image() = default;
  Image(int w, int h, int c, T fill = T(0))
      : width(w), height(h), channels(c),
        data(static_cast<std::size_t>(w) * h * c, fill) {}

  std::size_t index(int x, int y, int c = 0) const {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  T& at(int x, int y, int c = 0) { return data[index(x, y, c)]; }
  T at(int x, int y, int c = 0) const { return data[index(x, y, c)]; }

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }

  template <typename U> Image<U> cast() const {
    Image<U> out;
    out.width = width;
    out.height = height;
    out.channels = channels;
    out.data.assign(data.begin(), data.end());
    return out;
  }
};

template <typename T> struct Projection {
  Vec2<T> pixel;
  T depth;
};

template <typename T>
Projection<T> project_point(const Camera<T>& camera, const std::type_identity_t<Vec3<T>>& p) {
  const Vec3<T> c = camera.to_camera(p);
  if (!(c.z() > T(kBehindCameraDepth)))
    throw Error(ErrorCode::BehindCamera, "point is behind the camera");
  return {Vec2<T>(camera.fx * c.x() / c.z() + camera.cx,
                  camera.fy * c.y() / c.z() + camera.cy),
          c.z()};
}

// ---------------------------------------------------------------------------
// Quaternions, (w, x, y, z).

template <typename T> Mat3<T> quaternion_to_matrix(const Vec4<T>& q) {
  const T w = q[0], x = q[1], y = q[2], z = q[3];
  Mat3<T> r;
  r << T(1) - T(2) * (y * y + z * z), T(2) * (x * y - w * z), T(2) * (x * z + w * y),
      T(2) * (x * y + w * z), T(1) - T(2) * (x * x + z * z), T(2) * (y * z - w * x),
      T(2) * (x * z - w * y), T(2) * (y * z + w * x), T(1) - T(2) * (x * x + y * y);
  return r;
}

/// Unit quaternion of a proper rotation matrix (Shepperd's method), w >= 0.
template <typename T> Vec4<T> matrix_to_quaternion(const Mat3<T>& m) {
  Vec4<T> q;
  const T trace = m.trace();
  if (trace > m(0, 0) && trace > m(1, 1) && trace > m(2, 2)) {
    const T s = std::sqrt(T(1) + trace) * T(2);
    q << s / T(4), (m(2, 1) - m(1, 2)) / s, (m(0, 2) - m(2, 0)) / s, (m(1, 0) - m(0, 1)) / s;
  } else if (m(0, 0) > m(1, 1) && m(0, 0) > m(2, 2)) {
    const T s = std::sqrt(T(1) + m(0, 0) - m(1, 1) - m(2, 2)) * T(2);
    q << (m(2, 1) - m(1, 2)) / s, s / T(4), (m(0, 1) + m(1, 0)) / s, (m(0, 2) + m(2, 0)) / s;
  } else if (m(1, 1) > m(2, 2)) {
    const T s = std::sqrt(T(1) + m(1, 1) - m(0, 0) - m(2, 2)) * T(2);
    q << (m(0, 2) - m(2, 0)) / s, (m(0, 1) + m(1, 0)) / s, s / T(4), (m(1, 2) + m(2, 1)) / s;
  } else {
    const T s = std::sqrt(T(1) + m(2, 2) - m(0, 0) - m(1, 1)) * T(2);
    q << (m(1, 0) - m(0, 1)) / s, (m(0, 2) + m(2, 0)) / s, (m(1, 2) + m(2, 1)) / s, s / T(4);
  }
  if (q[0] < T(0)) q = -q;
  return q.normalized();
}

/// Hamilton product a * b.
template <typename T> Vec4<T> quaternion_multiply(const Vec4<T>& a, const Vec4<T>& b) {
  return Vec4<T>(a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
                 a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
                 a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
                 a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]);
}

template <typename T> Vec4<T> quaternion_conjugate(const Vec4<T>& q) {
  return Vec4<T>(q[0], -q[1], -q[2], -q[3]);
}

/// Matrix L(a) with a * b == L(a) * b.
template <typename T> Eigen::Matrix<T, 4, 4> quaternion_left_matrix(const Vec4<T>& a) {
  Eigen::Matrix<T, 4, 4> l;
  l << a[0], -a[1], -a[2], -a[3],
       a[1], a[0], -a[3], a[2],
       a[2], a[3], a[0], -a[1],
       a[3], -a[2], a[1], a[0];
  return l;
}

// ---------------------------------------------------------------------------
// Covariances.

/// Sigma = R S S^T R^T for a unit quaternion and per-axis standard deviations.
template <typename T>
Mat3<T> covariance_3d(const Vec4<T>& rotation, const Vec3<T>& scale) {
  if (!rotation.allFinite() || !scale.allFinite())
    throw Error(ErrorCode::InvalidParameter, "covariance inputs must be finite");
  const Mat3<T> r = quaternion_to_matrix(rotation);
  const Mat3<T> m = r * scale.asDiagonal();
  return m * m.transpose();
}

/// Jacobian of the perspective projection at camera-space point t.
template <typename T>
Mat23<T> projection_jacobian(const Camera<T>& camera, const Vec3<T>& t) {
  const T inv_z = T(1) / t.z();
  const T inv_z2 = inv_z * inv_z;
  Mat23<T> j;
  j << camera.fx * inv_z, T(0), -camera.fx * t.x() * inv_z2,
       T(0), camera.fy * inv_z, -camera.fy * t.y() * inv_z2;
  return j;
}

/// Screen-space covariance J W Sigma W^T J^T plus the anti-aliasing floor.
template <typename T>
Mat2<T> project_covariance(const Camera<T>& camera, const Vec3<T>& mean,
                           const Mat3<T>& cov3d) {
  const Vec3<T> t = camera.to_camera(mean);
  if (!(t.z() > T(kBehindCameraDepth)))
    throw Error(ErrorCode::BehindCamera, "splat mean is behind the camera");
  const Mat23<T> a = projection_jacobian(camera, t) * camera.rotation;
  Mat2<T> cov = a * cov3d * a.transpose();
  cov(0, 1) = cov(1, 0) = T(0.5) * (cov(0, 1) + cov(1, 0));
  cov(0, 0) += T(kCovarianceFloor);
  cov(1, 1) += T(kCovarianceFloor);
  return cov;
}

}  // namespace hera

namespace hera {

/// Camera at `eye` looking at `target`; `up` is the approximate world up.
/// Image y grows downward, so camera +y is the negated up direction.
template <typename T>
Camera<T> look_at_camera(const Vec3<T>& eye, const Vec3<T>& target, const Vec3<T>& up, T focal,
                         int width, int height) {
  const Vec3<T> forward = (target - eye).normalized();
  const Vec3<T> right = forward.cross(up).normalized();
  const Vec3<T> down = forward.cross(right);
  Camera<T> c;
  c.rotation.row(0) = right.transpose();
  c.rotation.row(1) = down.transpose();
  c.rotation.row(2) = forward.transpose();
  c.translation = -(c.rotation * eye);
  c.fx = c.fy = focal;
  c.cx = T(width) / T(2);
  c.cy = T(height) / T(2);
  c.width = width;
  c.height = height;
  return c;
}

/// `count` cameras evenly spaced on a horizontal circle around `target`.
template <typename T>
std::vector<Camera<T>> ring_cameras(int count, const Vec3<T>& target, T radius, T height_offset,
                                    T focal, int width, int height, T start_angle = T(0),
                                    T arc = T(2 * 3.14159265358979323846)) {
  std::vector<Camera<T>> cams;
  cams.reserve(count);
  for (int i = 0; i < count; ++i) {
    const T a = start_angle + arc * T(i) / T(count);
    const Vec3<T> eye = target + Vec3<T>(radius * std::sin(a), height_offset, -radius * std::cos(a));
    cams.push_back(look_at_camera<T>(eye, target, Vec3<T>(T(0), T(1), T(0)), focal, width, height));
  }
  return cams;
}

}  // namespace hera
