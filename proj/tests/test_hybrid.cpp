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

#include "fixtures.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <set>

namespace hera {
namespace {

using testing::Rng;
using V3 = Vec3<double>;
using testing::flat_quad;
using testing::iso_splat;
using testing::make_quads;
using testing::Quad;

Camera<double> tiny_camera(int w, int h) {
  Camera<double> c;
  c.fx = c.fy = 1.0;
  c.cx = w / 2.0;
  c.cy = h / 2.0;
  c.width = w;
  c.height = h;
  return c;
}

// ---------------------------------------------------------------------------
// Classification.

TEST(ClassifySplat, OutOfImageIsBehind) {
  const auto cam = tiny_camera(4, 4);
  Image<double> depth(4, 4, 1, 1.0);
  const auto c = classify_splat<double>(V3(-10, 0, 1), 1.0, depth, cam);
  EXPECT_EQ(c.cls, SplatMeshClass::BehindMesh);
  EXPECT_TRUE(std::isinf(c.reference_depth));
}

TEST(ClassifySplat, UncoveredTapIsDirect) {
  const auto cam = tiny_camera(4, 4);
  Image<double> depth(4, 4, 1, 1.0);
  depth.at(2, 2) = 0.0;
  const auto c = classify_splat<double>(V3(0, 0, 1), 0.5, depth, cam);
  EXPECT_EQ(c.cls, SplatMeshClass::DirectCompare);
  EXPECT_EQ(c.reference_depth, 0.0);
}

TEST(ClassifySplat, UniformDepthFront) {
  const auto cam = tiny_camera(4, 4);
  Image<double> depth(4, 4, 1, 3.0);
  const auto c = classify_splat<double>(V3(0, 0, 2), 2.0, depth, cam);
  EXPECT_EQ(c.cls, SplatMeshClass::FrontOfMesh);
  EXPECT_DOUBLE_EQ(c.reference_depth, 3.0);
}

TEST(ClassifySplat, InterpolatedTapsBehind) {
  const auto cam = tiny_camera(2, 2);
  Image<double> depth(2, 2, 1);
  depth.at(0, 0) = depth.at(1, 0) = 2.0;
  depth.at(0, 1) = depth.at(1, 1) = 4.0;
  const auto c = classify_splat<double>(V3(0, 0, 3.01), 3.01, depth, cam);
  EXPECT_EQ(c.cls, SplatMeshClass::BehindMesh);
  EXPECT_DOUBLE_EQ(c.reference_depth, 3.0);
}

// ---------------------------------------------------------------------------
// Merging.

MeshFragment<double> mesh_frag(double depth, std::uint32_t facet = 0) {
  MeshFragment<double> f{};
  f.depth = depth;
  f.alpha = 0.5;
  f.color = V3::Zero();
  f.facet_id = facet;
  return f;
}

SplatHit<double> hit(std::uint32_t id, double depth, SplatMeshClass cls) {
  return {id, 0.5, V3::Zero(), depth, cls};
}

std::vector<std::pair<FragmentSource, std::uint32_t>> order(const std::vector<HybridFragment<double>>& v) {
  std::vector<std::pair<FragmentSource, std::uint32_t>> out;
  for (const auto& f : v) out.push_back({f.source, f.index});
  return out;
}

constexpr auto M = FragmentSource::Mesh;
constexpr auto S = FragmentSource::Splat;
using Order = std::vector<std::pair<FragmentSource, std::uint32_t>>;

TEST(MergeFragments, NoMeshSortsByDepth) {
  std::vector<MeshFragment<double>> mesh;
  std::vector<SplatHit<double>> hits = {hit(0, 1.0, SplatMeshClass::DirectCompare),
                                        hit(1, 2.0, SplatMeshClass::DirectCompare)};
  EXPECT_EQ(order(merge_fragments<double>(mesh, hits, 0.05)), (Order{{S, 0}, {S, 1}}));
}

TEST(MergeFragments, FrontSplatPrecedesMesh) {
  std::vector<MeshFragment<double>> mesh = {mesh_frag(1.0)};
  std::vector<SplatHit<double>> hits = {hit(0, 1.01, SplatMeshClass::FrontOfMesh)};
  EXPECT_EQ(order(merge_fragments<double>(mesh, hits, 0.05)), (Order{{S, 0}, {M, 0}}));
  EXPECT_EQ(order(merge_fragments<double>(mesh, hits, 0.05, SortMode::Legacy)),
            (Order{{M, 0}, {S, 0}}));
}

TEST(MergeFragments, OverrideSendsSplatBehind) {
  std::vector<MeshFragment<double>> mesh = {mesh_frag(1.0)};
  std::vector<SplatHit<double>> hits = {hit(0, 1.10, SplatMeshClass::FrontOfMesh)};
  EXPECT_EQ(order(merge_fragments<double>(mesh, hits, 0.05)), (Order{{M, 0}, {S, 0}}));
  EXPECT_EQ(order(merge_fragments<double>(mesh, hits, 0.2)), (Order{{S, 0}, {M, 0}}));
}

TEST(MergeFragments, BehindSplatFollowsMeshEvenIfCloser) {
  std::vector<MeshFragment<double>> mesh = {mesh_frag(1.0)};
  std::vector<SplatHit<double>> hits = {hit(0, 0.9, SplatMeshClass::BehindMesh)};
  EXPECT_EQ(order(merge_fragments<double>(mesh, hits, 0.05)), (Order{{M, 0}, {S, 0}}));
}

TEST(MergeFragments, DirectSplatsCompareWithFront) {
  std::vector<MeshFragment<double>> mesh = {mesh_frag(1.0)};
  std::vector<SplatHit<double>> hits = {hit(0, 0.5, SplatMeshClass::DirectCompare),
                                        hit(1, 1.5, SplatMeshClass::DirectCompare)};
  EXPECT_EQ(order(merge_fragments<double>(mesh, hits, 0.05)), (Order{{S, 0}, {M, 0}, {S, 1}}));
}

TEST(MergeFragments, DeeperLayersInterleaveByDepth) {
  std::vector<MeshFragment<double>> mesh = {mesh_frag(1.0, 0), mesh_frag(2.0, 1), mesh_frag(3.0, 2)};
  std::vector<SplatHit<double>> hits = {hit(0, 1.5, SplatMeshClass::BehindMesh),
                                        hit(1, 2.0, SplatMeshClass::BehindMesh),
                                        hit(2, 2.5, SplatMeshClass::BehindMesh)};
  EXPECT_EQ(order(merge_fragments<double>(mesh, hits, 0.05)),
            (Order{{M, 0}, {S, 0}, {M, 1}, {S, 1}, {S, 2}, {M, 2}}));
}

TEST(MergeFragments, LegacyTieMeshFirst) {
  std::vector<MeshFragment<double>> mesh = {mesh_frag(1.0)};
  std::vector<SplatHit<double>> hits = {hit(0, 1.0, SplatMeshClass::FrontOfMesh)};
  EXPECT_EQ(order(merge_fragments<double>(mesh, hits, 0.05, SortMode::Legacy)),
            (Order{{M, 0}, {S, 0}}));
}

// ---------------------------------------------------------------------------
// Blending.

HybridFragment<double> frag(double alpha, const V3& c) { return {1.0, alpha, c, S, 0}; }

TEST(Blend, TwoLayers) {
  std::vector<HybridFragment<double>> f = {frag(0.6, V3(1, 0, 0)), frag(0.5, V3(0, 1, 0))};
  const auto c = blend<double>(f, V3::Zero());
  EXPECT_NEAR(c.x(), 0.6, 1e-15);
  EXPECT_NEAR(c.y(), 0.2, 1e-15);
  EXPECT_NEAR(c.z(), 0.0, 1e-15);
}

TEST(Blend, EmptyGivesBackground) {
  std::vector<HybridFragment<double>> f;
  EXPECT_EQ(blend<double>(f, V3(0.1, 0.2, 0.3)), V3(0.1, 0.2, 0.3));
}

TEST(Blend, EarlyExitAfterSaturation) {
  std::vector<HybridFragment<double>> f = {frag(0.995, V3(1, 0, 0)), frag(0.995, V3(0, 1, 0)),
                                           frag(0.995, V3(0, 0, 1))};
  const auto r = blend_fragments<double>(f, V3::Zero());
  EXPECT_EQ(r.used, 2u);
  EXPECT_EQ(r.color.z(), 0.0);
}

TEST(Blend, WeightsTelescope) {
  Rng rng(12);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<HybridFragment<double>> f;
    const int n = static_cast<int>(testing::uniform(rng, 0, 30));
    for (int k = 0; k < n; ++k)
      f.push_back(frag(testing::uniform(rng, 0.0, 0.99),
                       V3(testing::uniform(rng, 0, 1), testing::uniform(rng, 0, 1), testing::uniform(rng, 0, 1))));
    std::vector<double> w;
    const auto r = blend_fragments<double>(f, V3::Ones(), &w);
    double sum = r.transmittance;
    for (double x : w) {
      EXPECT_GE(x, 0.0);
      sum += x;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
    EXPECT_LE(r.color.maxCoeff(), 1.0 + 1e-12);
    EXPECT_GE(r.color.minCoeff(), 0.0);
  }
}

// ---------------------------------------------------------------------------
// Full renders against the brute-force oracles.

TEST(Render, SplatsOnlyMatchesOracle) {
  Rng rng(50);
  Scene<double> scene;
  scene.splats = testing::random_splats(rng, 50, 1.0, 0.03, 0.3);
  scene.background = V3(0.1, 0.2, 0.3);
  const auto cam = testing::front_camera<double>(64, 48, 50.0, 3.0);
  const auto expected = testing::ref_render_splats(scene.splats, cam, scene.background);
  EXPECT_LT(testing::max_abs_diff(render(scene, cam), expected), 1e-12);
  const auto f = render(scene.cast<float>(), cam.cast<float>());
  EXPECT_LT(testing::max_abs_diff(testing::to_double(f), expected), 1e-5);
}

TEST(Render, MaskReductionsAreExact) {
  Rng rng(51);
  Scene<float> scene;
  scene.mesh = testing::random_mesh(rng, 6, 0.8, 0.6).cast<float>();
  for (const auto& g : testing::random_splats(rng, 40, 1.0, 0.03, 0.3)) scene.splats.push_back(g.cast<float>());
  const auto cam = testing::front_camera<float>(48, 48, 40.f, 3.f);

  Scene<float> splats_only = scene;
  splats_only.mesh = TexturedMesh<float>{};
  RenderOptions o;
  o.primitive_mask = PrimitiveMask::SplatsOnly;
  EXPECT_EQ(render(scene, cam, o).data, render(splats_only, cam).data);

  Scene<float> mesh_only = scene;
  mesh_only.splats.clear();
  o.primitive_mask = PrimitiveMask::MeshOnly;
  EXPECT_EQ(render(scene, cam, o).data, render(mesh_only, cam).data);

  RenderOptions legacy;
  legacy.sort_mode = SortMode::Legacy;
  EXPECT_EQ(render(mesh_only, cam, legacy).data, render(mesh_only, cam).data);
  EXPECT_EQ(render(splats_only, cam, legacy).data, render(splats_only, cam).data);
}

TEST(Render, HybridMatchesOracle) {
  for (int seed = 0; seed < 4; ++seed) {
    Rng rng(60 + seed);
    Scene<double> scene;
    scene.mesh = testing::random_mesh(rng, 4, 0.7, 0.6);
    scene.splats = testing::random_splats(rng, 12, 0.9, 0.05, 0.3);
    scene.background = V3(0.2, 0.2, 0.2);
    const auto cam = testing::front_camera<double>(40, 40, 35.0, 3.0);
    for (bool legacy : {false, true}) {
      RenderOptions o;
      o.sort_mode = legacy ? SortMode::Legacy : SortMode::Stable;
      const auto got = render(scene, cam, o);
      const auto ref = testing::ref_render_hybrid(scene, cam, 0.05, legacy);
      int compared = 0;
      for (int y = 0; y < cam.height; ++y)
        for (int x = 0; x < cam.width; ++x) {
          if (testing::near_any_edge(scene.mesh, cam, x, y)) continue;
          ++compared;
          for (int ch = 0; ch < 3; ++ch)
            ASSERT_NEAR(got.at(x, y, ch), ref.image.at(x, y, ch), 1e-4)
                << "seed " << seed << " legacy " << legacy << " pixel " << x << "," << y;
          EXPECT_NEAR(ref.weight_sum.at(x, y), 1.0, 1e-12);
        }
      EXPECT_GT(compared, 1200);
    }
  }
}

TEST(Render, OpaqueMeshActsAsPainter) {
  Rng rng(70);
  const V3 wall(0.3, 0.6, 0.9);
  Scene<double> scene;
  scene.mesh = make_quads({flat_quad(-5, 5, -5, 5, 2.0, wall, 1.0)});
  auto behind = testing::random_splats(rng, 30, 0.5, 0.05, 0.2);
  for (auto& g : behind) g.position.z() += 3.5;
  const auto cam = testing::front_camera<double>(48, 48, 40.0, 0.0);
  // Splats whose mean projects outside the image are classified behind.
  std::vector<GaussianSplat<double>> front;
  for (auto g : testing::random_splats(rng, 40, 0.4, 0.05, 0.2)) {
    g.position.z() += 1.0;
    const auto p = project_point(cam, g.position);
    if (p.pixel.x() >= 0 && p.pixel.x() < 48 && p.pixel.y() >= 0 && p.pixel.y() < 48) front.push_back(g);
  }
  ASSERT_GT(front.size(), 20u);
  scene.splats = behind;
  scene.splats.insert(scene.splats.end(), front.begin(), front.end());
  const auto expected = testing::ref_render_splats(front, cam, wall);
  // Early exit can stop before the wall, leaving at most kMinTransmittance of it.
  EXPECT_LE(testing::max_abs_diff(render(scene, cam), expected), kMinTransmittance);
}

TEST(Render, ThreadCountInvariant) {
  Rng rng(80);
  Scene<float> scene;
  scene.mesh = testing::random_mesh(rng, 20, 0.8, 0.5).cast<float>();
  for (const auto& g : testing::random_splats(rng, 300, 1.0, 0.02, 0.2)) scene.splats.push_back(g.cast<float>());
  const auto cam = testing::front_camera<float>(70, 50, 50.f, 3.f);
  RenderOptions one, many;
  one.threads = 1;
  many.threads = 5;
  EXPECT_EQ(render(scene, cam, one).data, render(scene, cam, many).data);
}

// ---------------------------------------------------------------------------
// Footprint consistency and the override.

// Whether splat `id` precedes the front mesh fragment at (x, y); nullopt if
// the pixel has no mesh fragment or the splat does not touch it.
std::optional<bool> splat_before_front(const RenderState<float>& state, int x, int y, std::uint32_t id) {
  PixelScratch<float> scratch;
  pixel_fragments(state, x, y, scratch);
  std::optional<std::size_t> splat_pos, mesh_pos;
  for (std::size_t k = 0; k < scratch.merged.size(); ++k) {
    const auto& f = scratch.merged[k];
    if (f.source == FragmentSource::Mesh && f.index == 0) mesh_pos = k;
    if (f.source == FragmentSource::Splat && scratch.hits[f.index].splat_id == id) splat_pos = k;
  }
  if (!splat_pos || !mesh_pos) return std::nullopt;
  return *splat_pos < *mesh_pos;
}

struct OrderCounts {
  int before = 0;
  int after = 0;
};

OrderCounts count_orders(const Scene<float>& scene, const Camera<float>& cam, const RenderOptions& o) {
  const auto state = prepare_render(scene, cam, o);
  OrderCounts c;
  for (int y = 0; y < cam.height; ++y)
    for (int x = 0; x < cam.width; ++x)
      if (const auto b = splat_before_front(state, x, y, 0)) (*b ? c.before : c.after)++;
  return c;
}


TEST(FootprintConsistency, StableKeepsOneOrder) {
  const auto scene = testing::crossing_fixture();
  const auto cam = testing::front_camera<float>(64, 64, 64.f, 0.f);
  const auto stable = count_orders(scene, cam, RenderOptions{});
  EXPECT_GT(stable.before, 100);
  EXPECT_EQ(stable.after, 0);
  RenderOptions legacy;
  legacy.sort_mode = SortMode::Legacy;
  const auto mixed = count_orders(scene, cam, legacy);
  EXPECT_GT(mixed.before, 10);
  EXPECT_GT(mixed.after, 10);
  EXPECT_EQ(mixed.before + mixed.after, stable.before);
}


TEST(Override, LambdaDecidesCenterPixel) {
  const auto scene = testing::override_fixture();
  const auto cam = testing::front_camera<float>(32, 32, 32.f, 0.f);
  RenderOptions small, large;
  small.lambda = 0.05;
  large.lambda = 0.2;
  const auto a = render_with_state(scene, cam, small);
  const auto b = render_with_state(scene, cam, large);
  ASSERT_EQ(a.state.classes[0].cls, SplatMeshClass::FrontOfMesh);
  EXPECT_EQ(splat_before_front(a.state, 16, 16, 0), std::optional<bool>(false));
  EXPECT_EQ(splat_before_front(b.state, 16, 16, 0), std::optional<bool>(true));
  EXPECT_GT(a.image.at(16, 16, 0), a.image.at(16, 16, 1));
  EXPECT_GT(b.image.at(16, 16, 1), b.image.at(16, 16, 0));
}

TEST(Override, MonotoneInLambda) {
  Rng rng(90);
  Scene<float> scene;
  scene.mesh = testing::random_mesh(rng, 8, 0.6, 0.6).cast<float>();
  for (const auto& g : testing::random_splats(rng, 60, 0.8, 0.05, 0.25)) scene.splats.push_back(g.cast<float>());
  const auto cam = testing::front_camera<float>(40, 40, 35.f, 3.f);
  std::set<std::tuple<int, int, std::uint32_t>> previous;
  bool first = true;
  for (double lambda : {0.0, 0.02, 0.05, 0.1, 0.3, 1.0, 10.0}) {
    RenderOptions o;
    o.lambda = lambda;
    const auto state = prepare_render(scene, cam, o);
    std::set<std::tuple<int, int, std::uint32_t>> before;
    PixelScratch<float> scratch;
    for (int y = 0; y < cam.height; ++y)
      for (int x = 0; x < cam.width; ++x) {
        pixel_fragments(state, x, y, scratch);
        for (const auto& f : scratch.merged) {
          if (f.source == FragmentSource::Mesh) break;
          before.insert({x, y, scratch.hits[f.index].splat_id});
        }
      }
    if (!first) {
      for (const auto& e : previous) EXPECT_TRUE(before.count(e));
    }
    EXPECT_GE(before.size(), previous.size());
    previous = std::move(before);
    first = false;
  }
  EXPECT_GT(previous.size(), 0u);
}

}  // namespace
}  // namespace hera
