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

#include "hera/io/io.hpp"
#include "io_fixtures.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

namespace hera {
namespace {

namespace fs = std::filesystem;
using testing::Rng;

template <typename Fn> ErrorCode error_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::InvalidParameter;
}

template <typename Fn> std::string message_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

TEST(Obj, QuadIsFanTriangulated) {
  const auto m = io::parse_obj<float>("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\n"
                                      "vt 0 0\nvt 1 0\nvt 1 1\nvt 0 1\nf 1/1 2/2 3/3 4/4\n");
  ASSERT_EQ(m.facets.size(), 2u);
  EXPECT_EQ(m.uvs.size() * 3, 6u);
  EXPECT_EQ(m.facets[0], (std::array<std::uint32_t, 3>{0, 1, 2}));
  EXPECT_EQ(m.facets[1], (std::array<std::uint32_t, 3>{0, 2, 3}));
  EXPECT_EQ(m.uvs[1][2], Vec2<float>(0, 1));
}

TEST(Obj, MissingTextureCoordinates) {
  EXPECT_EQ(error_of([] { io::parse_obj<float>("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n"); }), ErrorCode::MissingUVs);
  EXPECT_EQ(error_of([] { io::parse_obj<float>("v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nf 1//1 2//1 3//1\n"); }),
            ErrorCode::MissingUVs);
}

TEST(Obj, ParseErrorNamesLine) {
  const auto msg = message_of([] { io::parse_obj<float>("v 0 0 0\n# c\nv 1 x 0\n", "m.obj"); });
  EXPECT_NE(msg.find("m.obj:3"), std::string::npos) << msg;
  EXPECT_EQ(error_of([] { io::parse_obj<float>("v 0 0 0\nvt 0 0\nf 1/1 2/1 1/1\n"); }), ErrorCode::ParseError);
}

TEST(Obj, NegativeIndicesAndExtraRecords) {
  const auto m = io::parse_obj<double>("o thing\nv 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nvt 0 0\nvt 1 0\nvt 0 1\n"
                                       "usemtl x\nf -3/-3/1 -2/-2/1 -1/-1/1\n");
  ASSERT_EQ(m.facets.size(), 1u);
  EXPECT_EQ(m.facets[0], (std::array<std::uint32_t, 3>{0, 1, 2}));
  EXPECT_EQ(m.uvs[0][1], Vec2<double>(1, 0));
}

TEST(Obj, RoundTripIsExact) {
  Rng rng(1);
  const auto mesh = testing::random_mesh(rng, 50, 2.0, 0.5).cast<float>();
  const auto back = io::parse_obj<float>(io::format_obj(mesh));
  EXPECT_EQ(back.vertices, mesh.vertices);
  EXPECT_EQ(back.facets, mesh.facets);
  EXPECT_EQ(back.uvs, mesh.uvs);
  const auto md = testing::random_mesh(rng, 20, 2.0, 0.5);
  const auto bd = io::parse_obj<double>(io::format_obj(md));
  EXPECT_EQ(bd.vertices, md.vertices);
  EXPECT_EQ(bd.uvs, md.uvs);
}

void expect_same_splat(const GaussianSplat<float>& a, const GaussianSplat<float>& b) {
  EXPECT_EQ(a.position, b.position);
  EXPECT_EQ(a.rotation, b.rotation);
  EXPECT_EQ(a.log_scale, b.log_scale);
  EXPECT_EQ(a.opacity_logit, b.opacity_logit);
  EXPECT_EQ(a.color.degree, b.color.degree);
  for (int j = 0; j < kMaxShCoeffs; ++j) EXPECT_EQ(a.color.coeffs[j], b.color.coeffs[j]);
}

TEST(Ply, RoundTripIsBitwise) {
  Rng rng(2);
  std::vector<GaussianSplat<float>> splats;
  for (const auto& g : testing::random_splats(rng, 1000, 3.0, 0.01, 0.5)) splats.push_back(g.cast<float>());
  const auto back = io::parse_splats<float>(io::format_splats(splats));
  ASSERT_EQ(back.splats.size(), splats.size());
  EXPECT_EQ(back.ignored_properties, 0u);
  for (std::size_t i = 0; i < splats.size(); ++i) expect_same_splat(back.splats[i], splats[i]);
}

TEST(Ply, EmptyFileRoundTrips) {
  EXPECT_TRUE(io::parse_splats<float>(io::format_splats(std::vector<GaussianSplat<float>>{})).splats.empty());
}

TEST(Ply, TruncationNamesRecord) {
  Rng rng(3);
  std::vector<GaussianSplat<float>> splats;
  for (const auto& g : testing::random_splats(rng, 10, 1.0, 0.01, 0.5)) splats.push_back(g.cast<float>());
  const std::string bytes = io::format_splats(splats);
  const std::size_t record = 4 * (14 + 45);
  const std::string cut = bytes.substr(0, bytes.size() - 3 * record - 7);
  const auto msg = message_of([&] { io::parse_splats<float>(cut); });
  EXPECT_NE(msg.find("record 6"), std::string::npos) << msg;
  EXPECT_EQ(error_of([&] { io::parse_splats<float>(cut); }), ErrorCode::ParseError);
}

TEST(Ply, DegreeTwoFileIsZeroPadded) {
  const std::string bytes = io::testing::degree_two_ply();
  const auto f = io::parse_splats<float>(bytes);
  ASSERT_EQ(f.splats.size(), 2u);
  EXPECT_EQ(f.ignored_properties, 3u);  // nx, ny, nz
  for (int s = 0; s < 2; ++s) {
    const auto& g = f.splats[s];
    EXPECT_EQ(g.color.degree, 2);
    EXPECT_EQ(g.position, Vec3<float>(s, 2 * s, 3 * s));
    for (int j = 1; j < 9; ++j)
      for (int c = 0; c < 3; ++c) EXPECT_EQ(g.color.coeffs[j][c], io::testing::degree_two_rest(s, c, j - 1));
    for (int j = 9; j < kMaxShCoeffs; ++j) EXPECT_EQ(g.color.coeffs[j], Vec3<float>::Zero());
  }
}

TEST(Ply, AsciiIsRejected) {
  EXPECT_EQ(error_of([] { io::parse_splats<float>("ply\nformat ascii 1.0\nelement vertex 0\nend_header\n"); }),
            ErrorCode::UnsupportedAscii);
  EXPECT_EQ(error_of([] {
              io::parse_splats<float>("ply\nformat binary_big_endian 1.0\nelement vertex 0\nend_header\n");
            }),
            ErrorCode::ParseError);
}

TEST(Heramap, RoundTripAndPlanarLayout) {
  TexelMap<float> map(3, 2, 2);
  for (std::size_t i = 0; i < map.data.size(); ++i) map.data[i] = float(i);
  const std::string bytes = io::format_heramap(io::to_planar(map));
  EXPECT_EQ(bytes.substr(0, 8), "HERAMAP1");
  ASSERT_EQ(bytes.size(), 8 + 12 + 4 * 12u);
  float first_plane[6];
  std::memcpy(first_plane, bytes.data() + 20, sizeof(first_plane));
  for (int i = 0; i < 6; ++i) EXPECT_EQ(first_plane[i], float(2 * i));
  const auto back = io::to_interleaved<float>(io::parse_heramap(bytes));
  EXPECT_EQ(back, map.data);
  EXPECT_EQ(error_of([&] { io::parse_heramap(bytes.substr(0, bytes.size() - 1)); }), ErrorCode::ParseError);
}

TEST(Rig, RoundTrip) {
  const std::vector<std::uint32_t> ids{4, 0, 7, 7};
  EXPECT_EQ(io::parse_rig(io::format_rig(ids)), ids);
  EXPECT_EQ(error_of([] { io::parse_rig("HERARIG1\x05"); }), ErrorCode::ParseError);
}

std::string camera_json(const std::string& name, const std::string& r, const std::string& t = "[0,0,0]") {
  return "{\"name\":\"" + name + "\",\"width\":64,\"height\":48,\"fx\":50,\"fy\":50,\"cx\":32,\"cy\":24,\"R\":" +
         r + ",\"t\":" + t + "}";
}

TEST(Cameras, IdentityRotation) {
  const auto set = io::parse_cameras<float>("{\"cameras\":[" + camera_json("a", "[1,0,0,0,1,0,0,0,1]") + "]}");
  ASSERT_EQ(set.size(), 1u);
  EXPECT_EQ(set.cameras[0].camera.rotation, Mat3<float>::Identity());
  EXPECT_EQ(set.cameras[0].camera.width, 64);
}

TEST(Cameras, ReflectionIsRejected) {
  EXPECT_EQ(error_of([] {
              io::parse_cameras<float>("{\"cameras\":[" + camera_json("a", "[1,0,0,0,1,0,0,0,-1]") + "]}");
            }),
            ErrorCode::NonOrthonormalRotation);
}

TEST(Cameras, DriftIsRepairedOrRejected) {
  const auto set = io::parse_cameras<double>("{\"cameras\":[" + camera_json("a", "[1,0.0004,0,0,1,0,0,0,1]") + "]}");
  const Mat3<double> r = set.cameras[0].camera.rotation;
  EXPECT_LT((r.transpose() * r - Mat3<double>::Identity()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(r.determinant(), 1.0, 1e-12);
  EXPECT_EQ(error_of([] {
              io::parse_cameras<float>("{\"cameras\":[" + camera_json("a", "[1,0.01,0,0,1,0,0,0,1]") + "]}");
            }),
            ErrorCode::NonOrthonormalRotation);
}

TEST(Cameras, DuplicateName) {
  const std::string c = camera_json("same", "[1,0,0,0,1,0,0,0,1]");
  EXPECT_EQ(error_of([&] { io::parse_cameras<float>("{\"cameras\":[" + c + "," + c + "]}"); }),
            ErrorCode::DuplicateName);
}

TEST(Cameras, RingProjectsOriginToCenter) {
  std::string doc = "{\"cameras\":[";
  const double radius = 2.5;
  for (int i = 0; i < 16; ++i) {
    const double a = 2 * 3.14159265358979323846 * i / 16;
    // Rows: right, down, forward; the forward axis points at the origin.
    const double r[9] = {std::cos(a), 0, std::sin(a), 0, 1, 0, -std::sin(a), 0, std::cos(a)};
    std::string rs = "[", ts = "[0,0," + std::to_string(radius) + "]";
    for (int k = 0; k < 9; ++k) rs += (k ? "," : "") + std::to_string(r[k]);
    rs += "]";
    doc += (i ? "," : "") + camera_json("ring" + std::to_string(i), rs, ts);
  }
  doc += "]}";
  const auto set = io::parse_cameras<double>(doc);
  ASSERT_EQ(set.size(), 16u);
  for (const auto& nc : set.cameras) {
    const auto& c = nc.camera;
    const Vec3<double> center = c.center();
    EXPECT_NEAR(center.norm(), radius, 1e-5);
    const Vec3<double> p = c.to_camera(Vec3<double>::Zero());
    EXPECT_NEAR(c.fx * p.x() / p.z() + c.cx, 32.0, 0.5);
    EXPECT_NEAR(c.fy * p.y() / p.z() + c.cy, 24.0, 0.5);
  }
}

TEST(Cameras, RoundTripIsExact) {
  io::CameraSet<float> set;
  const auto cams = ring_cameras<float>(5, Vec3<float>(0.1f, 0.2f, 0.3f), 3.0f, 0.5f, 40.0f, 32, 24);
  for (std::size_t i = 0; i < cams.size(); ++i) set.cameras.push_back({"c" + std::to_string(i), cams[i]});
  const auto back = io::parse_cameras<float>(io::format_cameras(set));
  ASSERT_EQ(back.size(), set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    EXPECT_EQ(back.cameras[i].name, set.cameras[i].name);
    EXPECT_EQ(back.cameras[i].camera.rotation, set.cameras[i].camera.rotation);
    EXPECT_EQ(back.cameras[i].camera.translation, set.cameras[i].camera.translation);
    EXPECT_EQ(back.cameras[i].camera.fx, set.cameras[i].camera.fx);
  }
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag)
      : path_(fs::temp_directory_path() / ("hera_" + tag + "_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                           "_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)))) {
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

TEST(Png, RoundTrips) {
  TempDir dir("png");
  Image<float> img(5, 3, 3);
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = float(i % 7) / 6.0f;
  io::write_png(dir.path() / "a.png", img, 8);
  int depth = 0;
  const auto a = io::read_png(dir.path() / "a.png", &depth);
  EXPECT_EQ(depth, 8);
  for (std::size_t i = 0; i < img.data.size(); ++i) EXPECT_NEAR(a.data[i], img.data[i], 0.5 / 255 + 1e-7);
  io::write_png(dir.path() / "b.png", img, 16);
  const auto b = io::read_png(dir.path() / "b.png", &depth);
  EXPECT_EQ(depth, 16);
  for (std::size_t i = 0; i < img.data.size(); ++i) EXPECT_NEAR(b.data[i], img.data[i], 0.5 / 65535 + 1e-7);
  io::save_display_png(dir.path() / "c.png", img);
  const auto c = io::load_display_png(dir.path() / "c.png");
  for (std::size_t i = 0; i < img.data.size(); ++i) EXPECT_NEAR(c.data[i], img.data[i], 0.01);
}

TEST(Png, CorruptFileIsParseError) {
  TempDir dir("pngbad");
  io::write_file(dir.path() / "bad.png", "\x89PNG\r\n\x1a\nnot really");
  EXPECT_EQ(error_of([&] { io::read_png(dir.path() / "bad.png"); }), ErrorCode::ParseError);
  EXPECT_EQ(error_of([&] { io::read_png(dir.path() / "missing.png"); }), ErrorCode::IoError);
}

TEST(Config, ParsesSectionsAndProfile) {
  const auto f = io::parse_fit_config(
      "# toy\nprofile = test\nseed = 7\nholdout = [\"c0\", \"c4\"]\nzero_maps = true\n"
      "[lr]\nuv_maps = 0.001\n[densify]\nenabled = false\ninterval = 50\n");
  EXPECT_EQ(f.fit.stage1_iters, 300);
  EXPECT_EQ(f.fit.total_iters, 3000);
  EXPECT_EQ(f.fit.seed, 7u);
  EXPECT_EQ(f.holdout, (std::vector<std::string>{"c0", "c4"}));
  EXPECT_TRUE(f.zero_maps);
  EXPECT_DOUBLE_EQ(f.fit.lr_uv_maps, 0.001);
  EXPECT_FALSE(f.fit.densify_enabled);
  EXPECT_EQ(f.fit.densify.interval, 50);
}

TEST(Config, Errors) {
  EXPECT_EQ(error_of([] { io::parse_fit_config("bogus = 1\n"); }), ErrorCode::ParseError);
  EXPECT_EQ(error_of([] { io::parse_fit_config("total_iters = many\n"); }), ErrorCode::ParseError);
  EXPECT_EQ(error_of([] { io::parse_fit_config("stage1_iters = 10\ntotal_iters = 5\n"); }), ErrorCode::ParseError);
  const auto msg = message_of([] { io::parse_fit_config("seed = 1\n\nnope\n", "fit.cfg"); });
  EXPECT_NE(msg.find("fit.cfg:3"), std::string::npos) << msg;
}

TEST(Bundle, SceneRoundTrip) {
  TempDir dir("bundle");
  Rng rng(4);
  Scene<double> sd;
  sd.mesh = testing::random_mesh(rng, 6, 0.5, 0.4, 4, 1);
  sd.splats = testing::random_splats(rng, 12, 0.5, 0.02, 0.2, 2);
  const Scene<float> s = sd.cast<float>();
  io::save_scene(s, dir.path());
  const auto b = io::load_bundle<float>(dir.path());
  EXPECT_FALSE(b.rigged());
  EXPECT_EQ(b.mesh.vertices, s.mesh.vertices);
  EXPECT_EQ(b.mesh.texture.data, s.mesh.texture.data);
  EXPECT_EQ(b.mesh.opacity.data, s.mesh.opacity.data);
  EXPECT_EQ(b.mesh.sh_degree, 1);
  ASSERT_EQ(b.splats.size(), s.splats.size());
  for (std::size_t i = 0; i < s.splats.size(); ++i) expect_same_splat(b.splats[i], s.splats[i]);
  const auto cam = testing::front_camera<float>(16, 16, 16.0f, 2.0f);
  const auto x = render(s, cam), y = render(b.scene(), cam);
  EXPECT_EQ(x.data, y.data);
}

TEST(Bundle, RiggedRoundTrip) {
  TempDir dir("rig");
  Rng rng(5);
  Scene<double> sd;
  sd.mesh = testing::random_mesh(rng, 4, 0.5, 0.4, 4, 0);
  sd.splats = testing::random_splats(rng, 9, 0.5, 0.02, 0.2, 1);
  const auto rig = rig_to_nearest_facet(sd.cast<float>());
  io::save_scene(rig, dir.path());
  const auto b = io::load_bundle<float>(dir.path());
  ASSERT_TRUE(b.rigged());
  const auto back = b.rigged_scene();
  ASSERT_EQ(back.splats.size(), rig.splats.size());
  for (std::size_t i = 0; i < rig.splats.size(); ++i) {
    EXPECT_EQ(back.splats[i].facet_id, rig.splats[i].facet_id);
    EXPECT_EQ(back.splats[i].local_position, rig.splats[i].local_position);
  }
  fs::remove(dir.path() / "texture.heramap");
  const auto msg = message_of([&] { io::load_bundle<float>(dir.path()); });
  EXPECT_NE(msg.find("texture.heramap"), std::string::npos) << msg;
}

TEST(Frames, TopologyMismatchNamesFrame) {
  TempDir dir("frames");
  Rng rng(6);
  const auto mesh = testing::random_mesh(rng, 3, 0.5, 0.4).cast<float>();
  auto other = mesh;
  other.facets.pop_back();
  other.uvs.pop_back();
  io::save_obj(mesh, dir.path() / "f000.obj");
  io::save_obj(other, dir.path() / "f001.obj");
  const auto frames = io::list_frames(dir.path());
  ASSERT_EQ(frames.size(), 2u);
  EXPECT_EQ(io::load_frame_vertices(frames[0], mesh), mesh.vertices);
  const auto msg = message_of([&] { io::load_frame_vertices(frames[1], mesh); });
  EXPECT_NE(msg.find("f001.obj"), std::string::npos) << msg;
}

// Mutated inputs must either load or raise a typed error.
TEST(Fuzz, LoadersOnlyRaiseTypedErrors) {
  const auto result = io::testing::fuzz_loaders(1500, 99);
  EXPECT_EQ(result.crashes, 0u) << result.first_crash;
  EXPECT_GT(result.accepted, 0u);
  EXPECT_GT(result.rejected, 0u);
}

}  // namespace
}  // namespace hera
