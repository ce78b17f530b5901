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

#include <limits>

namespace hera {

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;

namespace detail {

inline const std::array<double, kSsimWindow>& ssim_kernel() {
  static const std::array<double, kSsimWindow> k = [] {
    std::array<double, kSsimWindow> w{};
    double sum = 0;
    for (int i = 0; i < kSsimWindow; ++i) {
      const double d = i - kSsimWindow / 2;
      w[i] = std::exp(-d * d / (2 * kSsimSigma * kSsimSigma));
      sum += w[i];
    }
    for (auto& v : w) v /= sum;
    return w;
  }();
  return k;
}

/// Separable Gaussian filter of one channel plane with zero padding.
template <typename T>
void gaussian_filter(const std::vector<T>& in, int w, int h, std::vector<T>& tmp, std::vector<T>& out) {
  const auto& k = ssim_kernel();
  constexpr int r = kSsimWindow / 2;
  tmp.assign(in.size(), T(0));
  out.assign(in.size(), T(0));
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      T s = T(0);
      for (int i = -r; i <= r; ++i) {
        const int xx = x + i;
        if (xx >= 0 && xx < w) s += T(k[i + r]) * in[static_cast<std::size_t>(y) * w + xx];
      }
      tmp[static_cast<std::size_t>(y) * w + x] = s;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      T s = T(0);
      for (int i = -r; i <= r; ++i) {
        const int yy = y + i;
        if (yy >= 0 && yy < h) s += T(k[i + r]) * tmp[static_cast<std::size_t>(yy) * w + x];
      }
      out[static_cast<std::size_t>(y) * w + x] = s;
    }
}

template <typename T> void check_same_shape(const Image<T>& a, const Image<T>& b) {
  if (a.width != b.width || a.height != b.height || a.channels != b.channels)
    throw Error(ErrorCode::SizeMismatch, "images differ in size");
}

}  // namespace detail

/// Mean SSIM over all pixels and channels. If `grad` is given it receives
/// d(SSIM)/d(a).
template <typename T>
T ssim(const Image<T>& a, const Image<T>& b, Image<T>* grad = nullptr) {
  detail::check_same_shape(a, b);
  const int w = a.width, h = a.height, nc = a.channels;
  const std::size_t n = a.pixel_count();
  const T c1 = T(kSsimK1 * kSsimK1), c2 = T(kSsimK2 * kSsimK2);
  if (grad) *grad = Image<T>(w, h, nc);
  std::vector<T> x(n), y(n), xx(n), yy(n), xy(n), tmp;
  std::vector<T> mx, my, sxx, syy, sxy;
  std::vector<T> d_mx(n), d_sxx(n), d_sxy(n), f_mx, f_sxx, f_sxy;
  double total = 0;
  for (int c = 0; c < nc; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = a.data[i * nc + c];
      y[i] = b.data[i * nc + c];
      xx[i] = x[i] * x[i];
      yy[i] = y[i] * y[i];
      xy[i] = x[i] * y[i];
    }
    detail::gaussian_filter(x, w, h, tmp, mx);
    detail::gaussian_filter(y, w, h, tmp, my);
    detail::gaussian_filter(xx, w, h, tmp, sxx);
    detail::gaussian_filter(yy, w, h, tmp, syy);
    detail::gaussian_filter(xy, w, h, tmp, sxy);
    for (std::size_t i = 0; i < n; ++i) {
      const T vx = sxx[i] - mx[i] * mx[i];
      const T vy = syy[i] - my[i] * my[i];
      const T cxy = sxy[i] - mx[i] * my[i];
      const T a1 = T(2) * mx[i] * my[i] + c1;
      const T a2 = T(2) * cxy + c2;
      const T b1 = mx[i] * mx[i] + my[i] * my[i] + c1;
      const T b2 = vx + vy + c2;
      const T s = a1 * a2 / (b1 * b2);
      total += s;
      if (grad) {
        d_mx[i] = T(2) * my[i] * (a2 - a1) / (b1 * b2) - T(2) * mx[i] * s / b1 + T(2) * mx[i] * s / b2;
        d_sxx[i] = -s / b2;
        d_sxy[i] = T(2) * a1 / (b1 * b2);
      }
    }
    if (grad) {
      detail::gaussian_filter(d_mx, w, h, tmp, f_mx);
      detail::gaussian_filter(d_sxx, w, h, tmp, f_sxx);
      detail::gaussian_filter(d_sxy, w, h, tmp, f_sxy);
      const T inv = T(1) / T(n * nc);
      for (std::size_t i = 0; i < n; ++i)
        grad->data[i * nc + c] = inv * (f_mx[i] + T(2) * x[i] * f_sxx[i] + y[i] * f_sxy[i]);
    }
  }
  return T(total / static_cast<double>(n * nc));
}

/// Mean absolute difference; `grad` receives d/d(a).
template <typename T>
T l1_loss(const Image<T>& a, const Image<T>& b, Image<T>* grad = nullptr) {
  detail::check_same_shape(a, b);
  const T inv = T(1) / T(a.data.size());
  if (grad) *grad = Image<T>(a.width, a.height, a.channels);
  double sum = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const T d = a.data[i] - b.data[i];
    sum += std::abs(d);
    if (grad) grad->data[i] = d > T(0) ? inv : (d < T(0) ? -inv : T(0));
  }
  return T(sum / static_cast<double>(a.data.size()));
}

/// (1 - w) * L1 + w * (1 - SSIM); `grad` receives d/d(render).
template <typename T>
T photometric_loss(const Image<T>& render, const Image<T>& target, T ssim_weight,
                   Image<T>* grad = nullptr) {
  if (!(ssim_weight >= T(0) && ssim_weight <= T(1)))
    throw Error(ErrorCode::InvalidParameter, "ssim weight must be in [0, 1]");
  Image<T> g1, g2;
  const T l1 = l1_loss(render, target, grad ? &g1 : nullptr);
  T value = (T(1) - ssim_weight) * l1;
  if (ssim_weight > T(0)) value += ssim_weight * (T(1) - ssim(render, target, grad ? &g2 : nullptr));
  if (grad) {
    *grad = g1;
    for (auto& v : grad->data) v *= T(1) - ssim_weight;
    if (ssim_weight > T(0))
      for (std::size_t i = 0; i < grad->data.size(); ++i) grad->data[i] -= ssim_weight * g2.data[i];
  }
  return value;
}

template <typename T> double mse(const Image<T>& a, const Image<T>& b) {
  detail::check_same_shape(a, b);
  double sum = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = double(a.data[i]) - double(b.data[i]);
    sum += d * d;
  }
  return sum / static_cast<double>(a.data.size());
}

/// 10 log10(1 / MSE) for [0, 1] images; +inf for identical images.
template <typename T> double psnr(const Image<T>& a, const Image<T>& b) {
  const double m = mse(a, b);
  if (m == 0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / m);
}

}  // namespace hera
