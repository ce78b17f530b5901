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

// Real spherical harmonics up to degree 3 in the basis ordering and sign
// convention used by splat PLY files: rgb = sum_j c_j Y_j(d) + 0.5.

#include "hera/common.hpp"

#include <array>

namespace hera {

inline constexpr int kMaxShDegree = 3;
inline constexpr int kMaxShCoeffs = 16;

inline constexpr double kShC0 = 0.28209479177387814;
inline constexpr double kShC1 = 0.4886025119029199;
inline constexpr double kShC2[5] = {1.0925484305920792, -1.0925484305920792,
                                    0.31539156525252005, -1.0925484305920792,
                                    0.5462742152960396};
inline constexpr double kShC3[7] = {-0.5900435899266435, 2.890611442640554,
                                    -0.4570457994644658, 0.3731763325901154,
                                    -0.4570457994644658, 1.445305721320277,
                                    -0.5900435899266435};

constexpr int sh_coeff_count(int degree) { return (degree + 1) * (degree + 1); }

/// RGB SH coefficients; entries beyond sh_coeff_count(degree) are ignored.
template <typename T> struct SHColor {
  int degree = 0;
  std::array<Vec3<T>, kMaxShCoeffs> coeffs;

  SHColor() { coeffs.fill(Vec3<T>::Zero()); }
  explicit SHColor(int d) : degree(d) { coeffs.fill(Vec3<T>::Zero()); }

  int count() const { return sh_coeff_count(degree); }

  template <typename U> SHColor<U> cast() const {
    SHColor<U> out(degree);
    for (int i = 0; i < kMaxShCoeffs; ++i) out.coeffs[i] = coeffs[i].template cast<U>();
    return out;
  }
};

/// Fills basis[0, (degree+1)^2) for a unit direction.
template <typename T> void sh_basis(int degree, const Vec3<T>& d, T* basis) {
  const T x = d.x(), y = d.y(), z = d.z();
  basis[0] = T(kShC0);
  if (degree < 1) return;
  basis[1] = T(-kShC1) * y;
  basis[2] = T(kShC1) * z;
  basis[3] = T(-kShC1) * x;
  if (degree < 2) return;
  const T xx = x * x, yy = y * y, zz = z * z;
  basis[4] = T(kShC2[0]) * x * y;
  basis[5] = T(kShC2[1]) * y * z;
  basis[6] = T(kShC2[2]) * (T(2) * zz - xx - yy);
  basis[7] = T(kShC2[3]) * x * z;
  basis[8] = T(kShC2[4]) * (xx - yy);
  if (degree < 3) return;
  basis[9] = T(kShC3[0]) * y * (T(3) * xx - yy);
  basis[10] = T(kShC3[1]) * x * y * z;
  basis[11] = T(kShC3[2]) * y * (T(4) * zz - xx - yy);
  basis[12] = T(kShC3[3]) * z * (T(2) * zz - T(3) * xx - T(3) * yy);
  basis[13] = T(kShC3[4]) * x * (T(4) * zz - xx - yy);
  basis[14] = T(kShC3[5]) * z * (xx - yy);
  basis[15] = T(kShC3[6]) * x * (xx - T(3) * yy);
}

/// Partial derivatives of each basis polynomial with respect to (x, y, z).
template <typename T> void sh_basis_gradient(int degree, const Vec3<T>& d, Vec3<T>* grad) {
  const T x = d.x(), y = d.y(), z = d.z();
  grad[0].setZero();
  if (degree < 1) return;
  grad[1] = Vec3<T>(T(0), T(-kShC1), T(0));
  grad[2] = Vec3<T>(T(0), T(0), T(kShC1));
  grad[3] = Vec3<T>(T(-kShC1), T(0), T(0));
  if (degree < 2) return;
  const T xx = x * x, yy = y * y, zz = z * z;
  grad[4] = T(kShC2[0]) * Vec3<T>(y, x, T(0));
  grad[5] = T(kShC2[1]) * Vec3<T>(T(0), z, y);
  grad[6] = T(kShC2[2]) * Vec3<T>(T(-2) * x, T(-2) * y, T(4) * z);
  grad[7] = T(kShC2[3]) * Vec3<T>(z, T(0), x);
  grad[8] = T(kShC2[4]) * Vec3<T>(T(2) * x, T(-2) * y, T(0));
  if (degree < 3) return;
  grad[9] = T(kShC3[0]) * Vec3<T>(T(6) * x * y, T(3) * xx - T(3) * yy, T(0));
  grad[10] = T(kShC3[1]) * Vec3<T>(y * z, x * z, x * y);
  grad[11] = T(kShC3[2]) * Vec3<T>(T(-2) * x * y, T(4) * zz - xx - T(3) * yy, T(8) * y * z);
  grad[12] = T(kShC3[3]) * Vec3<T>(T(-6) * x * z, T(-6) * y * z, T(6) * zz - T(3) * xx - T(3) * yy);
  grad[13] = T(kShC3[4]) * Vec3<T>(T(4) * zz - T(3) * xx - yy, T(-2) * x * y, T(8) * x * z);
  grad[14] = T(kShC3[5]) * Vec3<T>(T(2) * x * z, T(-2) * y * z, xx - yy);
  grad[15] = T(kShC3[6]) * Vec3<T>(T(3) * xx - T(3) * yy, T(-6) * x * y, T(0));
}

/// Unclamped sum_j c_j Y_j(d) + 0.5.
template <typename T> Vec3<T> eval_sh_raw(const SHColor<T>& color, const Vec3<T>& dir) {
  T basis[kMaxShCoeffs];
  sh_basis(color.degree, dir, basis);
  Vec3<T> rgb = Vec3<T>::Constant(T(0.5));
  for (int j = 0; j < color.count(); ++j) rgb += basis[j] * color.coeffs[j];
  return rgb;
}

template <typename T> Vec3<T> eval_sh(const SHColor<T>& color, const Vec3<T>& dir) {
  return eval_sh_raw(color, dir).cwiseMax(T(0));
}

}  // namespace hera
