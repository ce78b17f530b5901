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
#include "hera/io/heramap.hpp"
#include "hera/io/obj.hpp"
#include "hera/io/ply.hpp"
#include "hera/rigging.hpp"

#include <optional>

namespace hera::io {

namespace fs = std::filesystem;

inline constexpr const char* kMeshFile = "mesh.obj";
inline constexpr const char* kTextureFile = "texture.heramap";
inline constexpr const char* kOpacityFile = "opacity.heramap";
inline constexpr const char* kSplatFile = "splats.ply";
inline constexpr const char* kRigFile = "rig.bin";

/// Contents of a scene directory. With a rig table the splat records hold
/// facet-local parameters.
template <typename T> struct SceneBundle {
  TexturedMesh<T> mesh;
  std::vector<GaussianSplat<T>> splats;
  std::optional<std::vector<std::uint32_t>> rig;

  bool rigged() const { return rig.has_value(); }

  RiggedScene<T> rigged_scene(const Vec3<T>& background = Vec3<T>::Zero()) const {
    RiggedScene<T> s;
    s.mesh = mesh;
    s.background = background;
    for (std::size_t i = 0; i < splats.size(); ++i) {
      RiggedSplat<T> r;
      r.facet_id = rig ? (*rig)[i] : 0;
      r.local_position = splats[i].position;
      r.local_rotation = splats[i].rotation;
      r.local_log_scale = splats[i].log_scale;
      r.opacity_logit = splats[i].opacity_logit;
      r.color = splats[i].color;
      s.splats.push_back(r);
    }
    return s;
  }

  /// World-space scene; rigged bundles are posed on the canonical mesh.
  Scene<T> scene(const Vec3<T>& background = Vec3<T>::Zero()) const {
    if (rigged()) return pose_scene(rigged_scene(background));
    Scene<T> s;
    s.mesh = mesh;
    s.splats = splats;
    s.background = background;
    return s;
  }
};

template <typename T> SceneBundle<T> make_bundle(const Scene<T>& s) {
  return {s.mesh, s.splats, std::nullopt};
}

template <typename T> SceneBundle<T> make_bundle(const RiggedScene<T>& s) {
  SceneBundle<T> b;
  b.mesh = s.mesh;
  b.rig.emplace();
  for (const auto& r : s.splats) {
    GaussianSplat<T> g;
    g.position = r.local_position;
    g.rotation = r.local_rotation;
    g.log_scale = r.local_log_scale;
    g.opacity_logit = r.opacity_logit;
    g.color = r.color;
    b.splats.push_back(g);
    b.rig->push_back(r.facet_id);
  }
  return b;
}

/// Loads mesh.obj, texture.heramap, opacity.heramap, splats.ply and the
/// optional rig.bin. Maps may be omitted for a mesh without facets.
template <typename T = float> SceneBundle<T> load_bundle(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::IoError, "scene directory '" + dir.string() + "' not found");
  SceneBundle<T> b;
  b.mesh = load_obj<T>(dir / kMeshFile);
  const bool has_maps = fs::exists(dir / kTextureFile) || fs::exists(dir / kOpacityFile);
  if (!b.mesh.facets.empty() || has_maps) {
    b.mesh.texture = load_texel_map<T>(dir / kTextureFile);
    b.mesh.opacity = load_texel_map<T>(dir / kOpacityFile);
    int degree = -1;
    for (int d = 0; d <= kMaxShDegree; ++d)
      if (b.mesh.texture.channels == 3 * sh_coeff_count(d)) degree = d;
    if (degree < 0)
      throw Error(ErrorCode::ParseError,
                  (dir / kTextureFile).string() + ": channel count " + std::to_string(b.mesh.texture.channels) +
                      " matches no SH degree");
    b.mesh.sh_degree = degree;
  }
  try {
    b.mesh.validate();
  } catch (const Error& e) {
    throw Error(e.code(), dir.string() + ": " + e.what());
  }
  b.splats = load_splats<T>(dir / kSplatFile).splats;
  if (fs::exists(dir / kRigFile)) {
    const fs::path rig_path = dir / kRigFile;
    b.rig = parse_rig(read_file(rig_path), rig_path.string());
    if (b.rig->size() != b.splats.size())
      throw Error(ErrorCode::SizeMismatch, rig_path.string() + ": " + std::to_string(b.rig->size()) +
                                               " facet ids for " + std::to_string(b.splats.size()) + " splats");
    for (auto f : *b.rig)
      if (f >= b.mesh.facets.size())
        throw Error(ErrorCode::ParseError, rig_path.string() + ": facet id " + std::to_string(f) + " out of range");
  }
  return b;
}

template <typename T> void save_bundle(const SceneBundle<T>& b, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create '" + dir.string() + "': " + ec.message());
  save_obj(b.mesh, dir / kMeshFile);
  if (!b.mesh.texture.empty()) save_texel_map(b.mesh.texture, dir / kTextureFile);
  if (!b.mesh.opacity.empty()) save_texel_map(b.mesh.opacity, dir / kOpacityFile);
  save_splats(b.splats, dir / kSplatFile);
  if (b.rig) write_file(dir / kRigFile, format_rig(*b.rig));
  else fs::remove(dir / kRigFile, ec);
}

template <typename T> void save_scene(const Scene<T>& s, const fs::path& dir) { save_bundle(make_bundle(s), dir); }
template <typename T> void save_scene(const RiggedScene<T>& s, const fs::path& dir) {
  save_bundle(make_bundle(s), dir);
}

/// OBJ files of an animation directory in lexicographic order.
inline std::vector<fs::path> list_frames(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::IoError, "frame directory '" + dir.string() + "' not found");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".obj") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

/// Vertices of one animation frame. The frame must share facets and uvs
/// with the canonical mesh.
template <typename T>
std::vector<Vec3<T>> load_frame_vertices(const fs::path& path, const TexturedMesh<T>& canonical) {
  const auto frame = load_obj<T>(path);
  if (frame.vertices.size() != canonical.vertices.size() || frame.facets != canonical.facets)
    throw Error(ErrorCode::SizeMismatch, path.string() + ": topology differs from the canonical mesh");
  return frame.vertices;
}

}  // namespace hera::io
