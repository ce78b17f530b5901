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

#include "hera/fit.hpp"
#include "hera/io/obj.hpp"

#include <functional>
#include <map>

namespace hera::io {

/// Fit settings read from a config file: the optimizer configuration plus
/// dataset options that the library-level fit does not need.
struct FitFile {
  FitConfig fit;
  std::vector<std::string> holdout;  ///< camera names kept out of training
  bool zero_maps = false;            ///< reset texture and opacity maps to 0 before fitting
  Vec3<float> background = Vec3<float>::Zero();
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r' || s.front() == '\n')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n')) s.remove_suffix(1);
  return s;
}

inline std::string unquote(std::string_view v) {
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return std::string(v.substr(1, v.size() - 2));
  return std::string(v);
}

inline bool parse_bool(std::string_view v, const std::string& where) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw Error(ErrorCode::ParseError, where + ": expected true or false, got '" + std::string(v) + "'");
}

inline std::vector<std::string> split_list(std::string_view v) {
  std::vector<std::string> out;
  std::string s = unquote(v);
  if (!s.empty() && s.front() == '[' && s.back() == ']') s = s.substr(1, s.size() - 2);
  std::size_t pos = 0;
  while (pos <= s.size()) {
    std::size_t comma = s.find(',', pos);
    if (comma == std::string::npos) comma = s.size();
    const std::string item = unquote(trim(std::string_view(s).substr(pos, comma - pos)));
    if (!item.empty()) out.push_back(item);
    pos = comma + 1;
  }
  return out;
}

}  // namespace detail

/// Parses `key = value` lines. `[section]` headers prefix the following keys
/// with "section."; `#` starts a comment. `profile = test` selects the
/// desk-scale schedule before any other key is applied.
inline FitFile parse_fit_config(std::string_view text, const std::string& source = "<config>") {
  struct Entry {
    std::string key, value, where;
  };
  std::vector<Entry> entries;
  std::string section;
  std::size_t line_no = 0, pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::string where = detail::at_line(source, line_no);
    if (line.front() == '[') {
      if (line.back() != ']') throw Error(ErrorCode::ParseError, where + ": unterminated section header");
      section = std::string(detail::trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw Error(ErrorCode::ParseError, where + ": expected key = value");
    const std::string key = std::string(detail::trim(line.substr(0, eq)));
    const std::string value = std::string(detail::trim(line.substr(eq + 1)));
    if (key.empty() || value.empty()) throw Error(ErrorCode::ParseError, where + ": expected key = value");
    entries.push_back({section.empty() ? key : section + "." + key, value, where});
  }

  FitFile out;
  for (const auto& e : entries)
    if (e.key == "profile") {
      const std::string p = detail::unquote(e.value);
      if (p == "test") out.fit = FitConfig::test_profile();
      else if (p != "default") throw Error(ErrorCode::ParseError, e.where + ": unknown profile '" + p + "'");
    }

  FitConfig& c = out.fit;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  auto real = [](double& dst) -> Setter {
    return [&dst](const std::string& v, const std::string& w) { dst = detail::parse_number<double>(v, w); };
  };
  auto integer = [](auto& dst) -> Setter {
    return [&dst](const std::string& v, const std::string& w) {
      using I = std::remove_reference_t<decltype(dst)>;
      I x{};
      const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
      if (ec != std::errc() || end != v.data() + v.size())
        throw Error(ErrorCode::ParseError, w + ": expected an integer, got '" + v + "'");
      dst = x;
    };
  };
  auto flag = [](bool& dst) -> Setter {
    return [&dst](const std::string& v, const std::string& w) { dst = detail::parse_bool(v, w); };
  };
  const std::map<std::string, Setter> setters = {
      {"profile", [](const std::string&, const std::string&) {}},
      {"stage1_iters", integer(c.stage1_iters)},
      {"total_iters", integer(c.total_iters)},
      {"ssim_weight", real(c.ssim_weight)},
      {"lambda_sort", real(c.lambda_sort)},
      {"seed", integer(c.seed)},
      {"eval_interval", integer(c.eval_interval)},
      {"checkpoint_interval", integer(c.checkpoint_interval)},
      {"scene_extent", real(c.scene_extent)},
      {"threads", integer(c.threads)},
      {"zero_maps", flag(out.zero_maps)},
      {"holdout", [&out](const std::string& v, const std::string&) { out.holdout = detail::split_list(v); }},
      {"background",
       [&out](const std::string& v, const std::string& w) {
         const auto parts = detail::split_list(v);
         if (parts.size() != 3) throw Error(ErrorCode::ParseError, w + ": background needs 3 numbers");
         for (int k = 0; k < 3; ++k) out.background[k] = detail::parse_number<float>(parts[k], w);
       }},
      {"lr.uv_maps", real(c.lr_uv_maps)},
      {"lr.position", real(c.lr_splat.position)},
      {"lr.rotation", real(c.lr_splat.rotation)},
      {"lr.log_scale", real(c.lr_splat.log_scale)},
      {"lr.opacity", real(c.lr_splat.opacity)},
      {"lr.sh_dc", real(c.lr_splat.sh_dc)},
      {"lr.sh_rest", real(c.lr_splat.sh_rest)},
      {"densify.enabled", flag(c.densify_enabled)},
      {"densify.interval", integer(c.densify.interval)},
      {"densify.grad_threshold", real(c.densify.grad_threshold)},
      {"densify.scale_split_threshold", real(c.densify.scale_split_threshold)},
      {"densify.opacity_prune_threshold", real(c.densify.opacity_prune_threshold)},
      {"densify.start_iter", integer(c.densify.start_iter)},
      {"densify.stop_iter", integer(c.densify.stop_iter)},
      {"regularizer.enabled", flag(c.regularize)},
      {"regularizer.position_weight", real(c.position_reg_weight)},
      {"regularizer.position_threshold", real(c.position_reg_threshold)},
      {"regularizer.scale_weight", real(c.scale_reg_weight)},
      {"regularizer.scale_threshold", real(c.scale_reg_threshold)},
  };
  for (const auto& e : entries) {
    const auto it = setters.find(e.key);
    if (it == setters.end()) throw Error(ErrorCode::ParseError, e.where + ": unknown key '" + e.key + "'");
    it->second(detail::unquote(e.value), e.where);
  }
  try {
    c.validate();
  } catch (const Error& err) {
    throw Error(ErrorCode::ParseError, source + ": " + err.what());
  }
  return out;
}

inline FitFile load_fit_config(const std::filesystem::path& path) {
  return parse_fit_config(read_file(path), path.string());
}

}  // namespace hera::io
