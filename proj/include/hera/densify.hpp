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

#include "hera/backward.hpp"

#include <random>

namespace hera {

/// Log-scale reduction applied to split children.
inline const double kSplitScaleLog = std::log(1.6);

struct DensifyConfig {
  int interval = 100;
  double grad_threshold = 2e-4;
  double scale_split_threshold = 0.01;  ///< fraction of the scene extent
  double opacity_prune_threshold = 5e-3;
  int start_iter = 500;
  int stop_iter = -1;  ///< negative: half of the total iterations
};

/// Uniform access to the optimized fields of world and rigged splats.
template <typename S> struct SplatFields;

template <typename T> struct SplatFields<GaussianSplat<T>> {
  using Scalar = T;
  static Vec3<T>& position(GaussianSplat<T>& s) { return s.position; }
  static Vec4<T>& rotation(GaussianSplat<T>& s) { return s.rotation; }
  static Vec3<T>& log_scale(GaussianSplat<T>& s) { return s.log_scale; }
  static const Vec3<T>& log_scale(const GaussianSplat<T>& s) { return s.log_scale; }
};

template <typename T> struct SplatFields<RiggedSplat<T>> {
  using Scalar = T;
  static Vec3<T>& position(RiggedSplat<T>& s) { return s.local_position; }
  static Vec4<T>& rotation(RiggedSplat<T>& s) { return s.local_rotation; }
  static Vec3<T>& log_scale(RiggedSplat<T>& s) { return s.local_log_scale; }
  static const Vec3<T>& log_scale(const RiggedSplat<T>& s) { return s.local_log_scale; }
};

/// Screen-gradient statistics accumulated between densification steps.
template <typename T> struct DensifyStats {
  std::vector<double> grad_sum;
  std::vector<std::uint32_t> views;

  void reset(std::size_t n) {
    grad_sum.assign(n, 0.0);
    views.assign(n, 0);
  }

  void add(const Gradients<T>& g) {
    if (grad_sum.size() != g.screen_grad_norm.size()) reset(g.screen_grad_norm.size());
    for (std::size_t i = 0; i < grad_sum.size(); ++i)
      if (g.touched[i]) {
        grad_sum[i] += double(g.screen_grad_norm[i]);
        ++views[i];
      }
  }

  double mean(std::size_t i) const { return views[i] ? grad_sum[i] / views[i] : 0.0; }
};

struct DensifyResult {
  /// For each output splat, the input index whose optimizer state it keeps,
  /// or -1 for a new splat.
  std::vector<std::int64_t> origin;
  std::size_t cloned = 0;
  std::size_t split = 0;
  std::size_t pruned = 0;
};

/// Clones small and splits large splats whose mean screen gradient exceeds
/// the threshold, then removes nearly transparent or non-finite splats.
/// `world_scale[i]` converts splat i's stored scale to meters (the facet's
/// mean edge length for rigged splats, 1 otherwise).
template <typename S>
DensifyResult densify_and_prune(std::vector<S>& splats, const DensifyStats<typename SplatFields<S>::Scalar>& stats,
                                const DensifyConfig& cfg, double scene_extent,
                                std::span<const double> world_scale, std::mt19937_64& rng) {
  using T = typename SplatFields<S>::Scalar;
  using F = SplatFields<S>;
  const std::size_t n = splats.size();
  if (stats.grad_sum.size() != n || world_scale.size() != n)
    throw Error(ErrorCode::ShapeMismatch, "densification statistics do not match the splats");
  DensifyResult result;
  std::vector<S> out;
  std::vector<std::int64_t> origin;
  std::vector<S> added;
  std::vector<bool> remove(n, false);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(stats.mean(i) > cfg.grad_threshold)) continue;
    const double max_scale = std::exp(double(F::log_scale(splats[i]).maxCoeff())) * world_scale[i];
    if (max_scale <= cfg.scale_split_threshold * scene_extent) {
      added.push_back(splats[i]);
      ++result.cloned;
    } else {
      S parent = splats[i];
      const Mat3<T> r = quaternion_to_matrix<T>(F::rotation(parent).normalized());
      const Vec3<T> s = F::log_scale(parent).array().exp().matrix();
      for (int child = 0; child < 2; ++child) {
        S c = parent;
        const Vec3<T> z(T(normal(rng)), T(normal(rng)), T(normal(rng)));
        F::position(c) += r * s.cwiseProduct(z);
        F::log_scale(c) -= Vec3<T>::Constant(T(kSplitScaleLog));
        added.push_back(c);
      }
      remove[i] = true;
      ++result.split;
    }
  }
  auto keep = [&](S& s) {
    const T opacity = sigmoid(s.opacity_logit);
    bool finite = F::position(s).allFinite() && F::rotation(s).allFinite() && F::log_scale(s).allFinite() &&
                  std::isfinite(s.opacity_logit);
    for (int j = 0; j < s.color.count(); ++j) finite = finite && s.color.coeffs[j].allFinite();
    return finite && !(opacity < T(cfg.opacity_prune_threshold));
  };
  for (std::size_t i = 0; i < n; ++i) {
    if (remove[i]) continue;
    if (!keep(splats[i])) {
      ++result.pruned;
      continue;
    }
    out.push_back(splats[i]);
    origin.push_back(static_cast<std::int64_t>(i));
  }
  for (auto& s : added) {
    if (!keep(s)) {
      ++result.pruned;
      continue;
    }
    out.push_back(s);
    origin.push_back(-1);
  }
  splats.swap(out);
  result.origin = std::move(origin);
  return result;
}

}  // namespace hera
