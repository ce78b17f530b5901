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

namespace hera {

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-15;

/// Moments of one parameter group. Empty moments are created on first use.
template <typename T> struct AdamState {
  std::vector<T> m;
  std::vector<T> v;
  long step = 0;

  /// Keeps the moments of entries with origin[i] >= 0 and zeroes the rest.
  void remap(std::span<const std::int64_t> origin, int stride) {
    if (m.empty()) return;
    std::vector<T> nm(origin.size() * stride, T(0)), nv(origin.size() * stride, T(0));
    for (std::size_t i = 0; i < origin.size(); ++i) {
      if (origin[i] < 0) continue;
      for (int k = 0; k < stride; ++k) {
        nm[i * stride + k] = m[origin[i] * stride + k];
        nv[i * stride + k] = v[origin[i] * stride + k];
      }
    }
    m.swap(nm);
    v.swap(nv);
  }
};

template <typename T>
void adam_step(std::span<T> params, std::span<const T> grads, AdamState<T>& state, double lr) {
  if (grads.size() != params.size())
    throw Error(ErrorCode::ShapeMismatch, "gradient size does not match parameter size");
  if (state.m.empty() && state.v.empty()) {
    state.m.assign(params.size(), T(0));
    state.v.assign(params.size(), T(0));
  }
  if (state.m.size() != params.size() || state.v.size() != params.size())
    throw Error(ErrorCode::ShapeMismatch, "optimizer state does not match parameter size");
  ++state.step;
  const double c1 = 1.0 - std::pow(kAdamBeta1, double(state.step));
  const double c2 = 1.0 - std::pow(kAdamBeta2, double(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    const double m = kAdamBeta1 * double(state.m[i]) + (1.0 - kAdamBeta1) * g;
    const double v = kAdamBeta2 * double(state.v[i]) + (1.0 - kAdamBeta2) * g * g;
    state.m[i] = T(m);
    state.v[i] = T(v);
    params[i] -= T(lr * (m / c1) / (std::sqrt(v / c2) + kAdamEpsilon));
  }
}

}  // namespace hera
