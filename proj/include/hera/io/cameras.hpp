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
#include "hera/io/binary.hpp"

#include <Eigen/SVD>
#include <json.hpp>

#include <set>

namespace hera::io {

/// Rotations whose max |R^T R - I| entry is below this are re-orthonormalized.
inline constexpr double kRotationDriftTolerance = 1e-3;

template <typename T> struct NamedCamera {
  std::string name;
  Camera<T> camera;
};

template <typename T> struct CameraSet {
  std::vector<NamedCamera<T>> cameras;

  std::size_t size() const { return cameras.size(); }
  const Camera<T>* find(const std::string& name) const {
    for (const auto& c : cameras)
      if (c.name == name) return &c.camera;
    return nullptr;
  }
};

/// Nearest rotation to `r` by SVD. Throws if `r` is not within the drift
/// tolerance of a proper rotation; returns `r` unchanged if its drift is
/// already below `keep_below`.
inline Mat3<double> orthonormalize_rotation(const Mat3<double>& r, const std::string& where, double keep_below = 0) {
  if (!r.allFinite()) throw Error(ErrorCode::NonOrthonormalRotation, where + ": rotation is not finite");
  const double drift = (r.transpose() * r - Mat3<double>::Identity()).cwiseAbs().maxCoeff();
  if (!(drift < kRotationDriftTolerance))
    throw Error(ErrorCode::NonOrthonormalRotation, where + ": rotation drift " + std::to_string(drift) + " too large");
  if (r.determinant() < 0) throw Error(ErrorCode::NonOrthonormalRotation, where + ": rotation has determinant -1");
  if (drift < keep_below) return r;
  Eigen::JacobiSVD<Mat3<double>> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

/// Parses {"cameras":[{"name","width","height","fx","fy","cx","cy","R":[9],"t":[3]}]}.
/// "width" and "height" may instead be given once at the top level.
template <typename T = float>
CameraSet<T> parse_cameras(std::string_view text, const std::string& source = "<cameras>") {
  using nlohmann::json;
  CameraSet<T> set;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, source + ": " + e.what());
  }
  try {
    if (!doc.is_object() || !doc.contains("cameras") || !doc["cameras"].is_array())
      throw Error(ErrorCode::ParseError, source + ": expected an object with a 'cameras' array");
    std::set<std::string> names;
    std::size_t index = 0;
    for (const json& c : doc["cameras"]) {
      const std::string where = source + ": camera " + std::to_string(index++);
      if (!c.is_object()) throw Error(ErrorCode::ParseError, where + " is not an object");
      auto number = [&](const char* key) -> double {
        const json* v = c.contains(key) ? &c[key] : doc.contains(key) ? &doc[key] : nullptr;
        if (!v || !v->is_number()) throw Error(ErrorCode::ParseError, where + ": missing number '" + key + "'");
        const double x = v->get<double>();
        if (!std::isfinite(x)) throw Error(ErrorCode::ParseError, where + ": '" + key + "' is not finite");
        return x;
      };
      auto array = [&](const char* key, std::size_t n) {
        if (!c.contains(key) || !c[key].is_array() || c[key].size() != n)
          throw Error(ErrorCode::ParseError, where + ": '" + key + "' needs " + std::to_string(n) + " numbers");
        std::vector<double> out;
        for (const json& v : c[key]) {
          if (!v.is_number()) throw Error(ErrorCode::ParseError, where + ": '" + key + "' needs numbers");
          out.push_back(v.get<double>());
        }
        return out;
      };
      if (!c.contains("name") || !c["name"].is_string()) throw Error(ErrorCode::ParseError, where + ": missing 'name'");
      NamedCamera<T> nc;
      nc.name = c["name"].get<std::string>();
      if (!names.insert(nc.name).second)
        throw Error(ErrorCode::DuplicateName, source + ": camera name '" + nc.name + "' appears twice");
      const double w = number("width"), h = number("height");
      if (!(w >= 1 && w <= 16384 && h >= 1 && h <= 16384) || w != std::floor(w) || h != std::floor(h))
        throw Error(ErrorCode::ParseError, where + ": image size must be an integer in [1, 16384]");
      auto& cam = nc.camera;
      cam.width = int(w);
      cam.height = int(h);
      cam.fx = T(number("fx"));
      cam.fy = T(number("fy"));
      cam.cx = T(number("cx"));
      cam.cy = T(number("cy"));
      const auto r = array("R", 9);
      const auto t = array("t", 3);
      Mat3<double> rot;
      for (int i = 0; i < 9; ++i) rot(i / 3, i % 3) = r[i];
      cam.rotation = orthonormalize_rotation(rot, where, 8 * double(std::numeric_limits<T>::epsilon())).cast<T>();
      cam.translation = Vec3<double>(t[0], t[1], t[2]).cast<T>();
      if (!(cam.fx > T(0) && cam.fy > T(0)) || !std::isfinite(double(cam.fx)) || !std::isfinite(double(cam.fy)) ||
          !std::isfinite(double(cam.cx)) || !std::isfinite(double(cam.cy)) || !cam.translation.allFinite())
        throw Error(ErrorCode::ParseError, where + ": intrinsics or translation out of range");
      set.cameras.push_back(std::move(nc));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, source + ": " + e.what());
  }
  return set;
}

template <typename T = float> CameraSet<T> load_cameras(const std::filesystem::path& path) {
  return parse_cameras<T>(read_file(path), path.string());
}

template <typename T> std::string format_cameras(const CameraSet<T>& set) {
  using nlohmann::json;
  json cams = json::array();
  for (const auto& nc : set.cameras) {
    const auto& c = nc.camera;
    json r = json::array(), t = json::array();
    for (int i = 0; i < 9; ++i) r.push_back(double(c.rotation(i / 3, i % 3)));
    for (int i = 0; i < 3; ++i) t.push_back(double(c.translation[i]));
    cams.push_back({{"name", nc.name}, {"width", c.width}, {"height", c.height}, {"fx", double(c.fx)},
                    {"fy", double(c.fy)}, {"cx", double(c.cx)}, {"cy", double(c.cy)}, {"R", r}, {"t", t}});
  }
  return json{{"cameras", cams}}.dump(2) + "\n";
}

template <typename T> void save_cameras(const CameraSet<T>& set, const std::filesystem::path& path) {
  write_file(path, format_cameras(set));
}

}  // namespace hera::io
