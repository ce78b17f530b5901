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

#include "hera/adam.hpp"
#include "hera/densify.hpp"
#include "hera/loss.hpp"

#include <functional>
#include <type_traits>

namespace hera {

struct SplatLearningRates {
  double position = 1.6e-4;  ///< multiplied by the scene extent
  double rotation = 1e-3;
  double log_scale = 5e-3;
  double opacity = 0.05;
  double sh_dc = 2.5e-3;
  double sh_rest = 2.5e-3 / 20;
};

struct FitConfig {
  int stage1_iters = 9000;
  int total_iters = 30000;
  double lr_uv_maps = 5e-4;
  SplatLearningRates lr_splat;
  double ssim_weight = 0.2;
  bool densify_enabled = true;
  DensifyConfig densify;
  double lambda_sort = 0.05;
  std::uint64_t seed = 0;
  int eval_interval = 100;  ///< held-out PSNR period; the last iteration is always evaluated
  int checkpoint_interval = 0;
  double scene_extent = 0;  ///< 0: derived from the camera positions
  // Local position and scale regularizers for rigged splats.
  bool regularize = false;
  double position_reg_weight = 0.01;
  double position_reg_threshold = 1.0;
  double scale_reg_weight = 1.0;
  double scale_reg_threshold = 0.6;
  int threads = 0;

  /// Desk-scale schedule used by the tests and the toy fit.
  static FitConfig test_profile() {
    FitConfig c;
    c.stage1_iters = 300;
    c.total_iters = 3000;
    return c;
  }

  int densify_stop() const { return densify.stop_iter < 0 ? total_iters / 2 : densify.stop_iter; }

  void validate() const {
    const double lrs[] = {lr_uv_maps, lr_splat.position, lr_splat.rotation, lr_splat.log_scale,
                          lr_splat.opacity, lr_splat.sh_dc, lr_splat.sh_rest};
    for (double lr : lrs)
      if (!(lr > 0)) throw Error(ErrorCode::InvalidParameter, "learning rates must be positive");
    if (!(ssim_weight >= 0 && ssim_weight <= 1))
      throw Error(ErrorCode::InvalidParameter, "ssim weight must be in [0, 1]");
    if (stage1_iters < 0 || total_iters < 0 || stage1_iters > total_iters)
      throw Error(ErrorCode::InvalidParameter, "need 0 <= stage1_iters <= total_iters");
    if (densify.interval < 1 || eval_interval < 1)
      throw Error(ErrorCode::InvalidParameter, "intervals must be positive");
    if (!(lambda_sort >= 0)) throw Error(ErrorCode::InvalidParameter, "lambda must be non-negative");
  }
};

template <typename T> struct View {
  std::string name;
  Camera<T> camera;
  Image<T> target;
};

struct FitLogEntry {
  int iter = 0;
  double loss = 0;
  double psnr_holdout = std::numeric_limits<double>::quiet_NaN();
  std::size_t num_splats = 0;
};

/// 1.1 times the largest camera distance from the mean camera center.
template <typename T> double camera_extent(std::span<const View<T>> views) {
  if (views.empty()) return 1.0;
  Vec3<double> mean = Vec3<double>::Zero();
  for (const auto& v : views) mean += v.camera.center().template cast<double>();
  mean /= double(views.size());
  double r = 0;
  for (const auto& v : views) r = std::max(r, (v.camera.center().template cast<double>() - mean).norm());
  return r > 0 ? 1.1 * r : 1.0;
}

template <typename Model> constexpr bool kIsRigged = false;
template <typename T> constexpr bool kIsRigged<RiggedScene<T>> = true;

/// Fits the texture map, opacity map and splats of `model` (a Scene or a
/// RiggedScene) to the training views. Iterations [start_iter, total_iters)
/// are run, so a checkpoint can be resumed by passing its iteration.
template <typename Model> class Fitter {
 public:
  using T = std::remove_cvref_t<decltype(std::declval<Model>().background.x())>;
  using Splat = typename decltype(std::declval<Model>().splats)::value_type;
  using F = SplatFields<Splat>;
  using Checkpoint = std::function<void(int next_iter, const Model&)>;

  Fitter(Model model, std::vector<View<T>> train, std::vector<View<T>> holdout, FitConfig cfg)
      : model_(std::move(model)), train_(std::move(train)), holdout_(std::move(holdout)), cfg_(cfg) {
    cfg_.validate();
    if (train_.empty()) throw Error(ErrorCode::InvalidParameter, "fit needs at least one training view");
    model_.mesh.validate();
    if constexpr (kIsRigged<Model>) model_.validate();
    for (const auto& v : train_) check_view(v);
    for (const auto& v : holdout_) check_view(v);
    extent_ = cfg_.scene_extent > 0 ? cfg_.scene_extent : camera_extent<T>(train_);
  }

  const Model& model() const { return model_; }
  const std::vector<FitLogEntry>& log() const { return log_; }
  double scene_extent() const { return extent_; }

  /// Renderable scene for the current parameters.
  Scene<T> scene() const {
    if constexpr (kIsRigged<Model>) return pose_scene(model_, DegeneratePolicy::Hide, cfg_.threads);
    else return model_;
  }

  double holdout_psnr(PrimitiveMask mask = PrimitiveMask::Both) const {
    if (holdout_.empty()) return std::numeric_limits<double>::quiet_NaN();
    const Scene<T> s = scene();
    double sum = 0;
    for (const auto& v : holdout_) sum += psnr(render(s, v.camera, options(mask)), v.target);
    return sum / double(holdout_.size());
  }

  /// Runs iterations [start_iter, total_iters). Throws NumericalFailure on a
  /// non-finite loss; the model then holds the last finite parameters.
  void run(int start_iter = 0, const Checkpoint& checkpoint = {}) {
    if (start_iter < 0 || start_iter > cfg_.total_iters)
      throw Error(ErrorCode::InvalidParameter, "start iteration out of range");
    stats_.reset(model_.splats.size());
    for (int it = start_iter; it < cfg_.total_iters; ++it) {
      step(it);
      if (checkpoint && cfg_.checkpoint_interval > 0 && (it + 1) % cfg_.checkpoint_interval == 0)
        checkpoint(it + 1, model_);
    }
  }

  /// Index of the training view used at iteration `it`.
  std::size_t view_index(int it) const {
    std::seed_seq seq{static_cast<std::uint32_t>(cfg_.seed), static_cast<std::uint32_t>(cfg_.seed >> 32),
                      static_cast<std::uint32_t>(it)};
    std::mt19937_64 rng(seq);
    return std::uniform_int_distribution<std::size_t>(0, train_.size() - 1)(rng);
  }

 private:
  void check_view(const View<T>& v) const {
    v.camera.validate();
    if (v.target.width != v.camera.width || v.target.height != v.camera.height || v.target.channels != 3)
      throw Error(ErrorCode::SizeMismatch, "target image '" + v.name + "' does not match its camera");
  }

  RenderOptions options(PrimitiveMask mask) const {
    RenderOptions o;
    o.lambda = cfg_.lambda_sort;
    o.primitive_mask = mask;
    o.threads = cfg_.threads;
    return o;
  }

  void step(int it) {
    const bool stage1 = it < cfg_.stage1_iters;
    const View<T>& view = train_[view_index(it)];
    const Scene<T> s = scene();
    const auto fwd = render_with_state(s, view.camera, options(stage1 ? PrimitiveMask::MeshOnly : PrimitiveMask::Both));
    Image<T> d_image;
    double loss = photometric_loss(fwd.image, view.target, T(cfg_.ssim_weight), &d_image);
    if (!std::isfinite(loss))
      throw Error(ErrorCode::NumericalFailure, "non-finite loss at iteration " + std::to_string(it));
    const Gradients<T> g = backward_render(s, fwd.state, d_image);

    adam_step<T>(model_.mesh.texture.data, g.texture, adam_texture_, cfg_.lr_uv_maps);
    adam_step<T>(model_.mesh.opacity.data, g.opacity, adam_opacity_, cfg_.lr_uv_maps);
    if (!stage1 && !model_.splats.empty()) {
      std::vector<SplatGradient<T>> sg;
      if constexpr (kIsRigged<Model>) {
        sg = rigged_gradients(model_.splats, frames(), g.splats);
        loss += regularize(sg);
      } else {
        sg = g.splats;
      }
      update_splats(sg);
      if (cfg_.densify_enabled) densify(it, g);
    }
    FitLogEntry e;
    e.iter = it;
    e.loss = loss;
    e.num_splats = model_.splats.size();
    if ((it + 1) % cfg_.eval_interval == 0 || it + 1 == cfg_.total_iters) e.psnr_holdout = holdout_psnr();
    log_.push_back(e);
  }

  std::vector<std::optional<FacetFrame<T>>> frames() const {
    return facet_frames<T>(model_.mesh.vertices, model_.mesh.facets, cfg_.threads);
  }

  double regularize(std::vector<SplatGradient<T>>& sg) const {
    if (!cfg_.regularize) return 0.0;
    const double n = double(model_.splats.size());
    double value = 0;
    for (std::size_t i = 0; i < model_.splats.size(); ++i) {
      const auto& r = model_.splats[i];
      const double len = double(r.local_position.norm());
      const double over = len - cfg_.position_reg_threshold;
      if (over > 0) {
        value += cfg_.position_reg_weight * over * over / n;
        sg[i].position += T(2 * cfg_.position_reg_weight * over / (len * n)) * r.local_position;
      }
      for (int k = 0; k < 3; ++k) {
        const double s = std::exp(double(r.local_log_scale[k]));
        const double excess = s - cfg_.scale_reg_threshold;
        if (excess > 0) {
          value += cfg_.scale_reg_weight * excess * excess / n;
          sg[i].log_scale[k] += T(2 * cfg_.scale_reg_weight * excess * s / n);
        }
      }
    }
    return value;
  }

  template <typename Get>
  void group_step(int width, AdamState<T>& state, double lr, const std::vector<SplatGradient<T>>& sg, Get get) {
    const std::size_t n = model_.splats.size();
    buf_p_.resize(n * width);
    buf_g_.resize(n * width);
    for (std::size_t i = 0; i < n; ++i)
      for (int k = 0; k < width; ++k) {
        auto [p, g] = get(model_.splats[i], sg[i], k);
        buf_p_[i * width + k] = p;
        buf_g_[i * width + k] = g;
      }
    adam_step<T>(buf_p_, buf_g_, state, lr);
    for (std::size_t i = 0; i < n; ++i)
      for (int k = 0; k < width; ++k) get(model_.splats[i], sg[i], k).first = buf_p_[i * width + k];
  }

  void update_splats(const std::vector<SplatGradient<T>>& sg) {
    using Pair = std::pair<T&, T>;
    group_step(3, adam_position_, cfg_.lr_splat.position * extent_, sg,
               [](Splat& s, const SplatGradient<T>& g, int k) { return Pair{F::position(s)[k], g.position[k]}; });
    group_step(4, adam_rotation_, cfg_.lr_splat.rotation, sg,
               [](Splat& s, const SplatGradient<T>& g, int k) { return Pair{F::rotation(s)[k], g.rotation[k]}; });
    group_step(3, adam_scale_, cfg_.lr_splat.log_scale, sg,
               [](Splat& s, const SplatGradient<T>& g, int k) { return Pair{F::log_scale(s)[k], g.log_scale[k]}; });
    group_step(1, adam_opacity_logit_, cfg_.lr_splat.opacity, sg,
               [](Splat& s, const SplatGradient<T>& g, int) { return Pair{s.opacity_logit, g.opacity_logit}; });
    group_step(3, adam_sh_dc_, cfg_.lr_splat.sh_dc, sg,
               [](Splat& s, const SplatGradient<T>& g, int k) { return Pair{s.color.coeffs[0][k], g.sh[0][k]}; });
    group_step(3 * (kMaxShCoeffs - 1), adam_sh_rest_, cfg_.lr_splat.sh_rest, sg,
               [](Splat& s, const SplatGradient<T>& g, int k) {
                 return Pair{s.color.coeffs[1 + k / 3][k % 3], g.sh[1 + k / 3][k % 3]};
               });
  }

  void densify(int it, const Gradients<T>& g) {
    if (it < cfg_.densify.start_iter || it > cfg_.densify_stop()) return;
    stats_.add(g);
    if ((it + 1) % cfg_.densify.interval != 0) return;
    std::vector<double> world_scale(model_.splats.size(), 1.0);
    if constexpr (kIsRigged<Model>) {
      const auto fr = frames();
      for (std::size_t i = 0; i < model_.splats.size(); ++i)
        if (const auto& f = fr[model_.splats[i].facet_id]) world_scale[i] = double(f->scale);
    }
    std::seed_seq seq{static_cast<std::uint32_t>(cfg_.seed), static_cast<std::uint32_t>(it), 0x64656e73u};
    std::mt19937_64 rng(seq);
    const auto result = densify_and_prune(model_.splats, stats_, cfg_.densify, extent_, world_scale, rng);
    adam_position_.remap(result.origin, 3);
    adam_rotation_.remap(result.origin, 4);
    adam_scale_.remap(result.origin, 3);
    adam_opacity_logit_.remap(result.origin, 1);
    adam_sh_dc_.remap(result.origin, 3);
    adam_sh_rest_.remap(result.origin, 3 * (kMaxShCoeffs - 1));
    stats_.reset(model_.splats.size());
  }

  Model model_;
  std::vector<View<T>> train_;
  std::vector<View<T>> holdout_;
  FitConfig cfg_;
  double extent_ = 1.0;
  std::vector<FitLogEntry> log_;
  DensifyStats<T> stats_;
  AdamState<T> adam_texture_, adam_opacity_;
  AdamState<T> adam_position_, adam_rotation_, adam_scale_, adam_opacity_logit_, adam_sh_dc_, adam_sh_rest_;
  std::vector<T> buf_p_, buf_g_;
};

template <typename Model> struct FitResult {
  Model model;
  std::vector<FitLogEntry> log;
};

template <typename Model, typename T>
FitResult<Model> fit(Model init, std::vector<View<T>> train, std::vector<View<T>> holdout, const FitConfig& cfg) {
  Fitter<Model> f(std::move(init), std::move(train), std::move(holdout), cfg);
  f.run();
  return {f.model(), f.log()};
}

}  // namespace hera
