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
#include "hera/mesh.hpp"

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <memory>

namespace hera::io {

/// Exponent of the display encoding used for 8-bit output images.
inline constexpr double kDisplayGamma = 2.2;

namespace detail {

struct PngFile {
  std::FILE* f = nullptr;
  ~PngFile() {
    if (f) std::fclose(f);
  }
};

inline void png_error_to_jmp(png_structp png, png_const_charp msg) {
  auto* text = static_cast<std::string*>(png_get_error_ptr(png));
  if (text) *text = msg;
  png_longjmp(png, 1);
}

inline void png_warning_ignore(png_structp, png_const_charp) {}

// State touched after setjmp lives in the caller's frame.
struct PngScratch {
  std::string message;
  std::vector<png_byte> pixels;
  std::vector<png_bytep> rows;
};

// Decodes into `out` as interleaved RGB samples scaled to [0, 1]. Returns
// false with s.message set on failure.
inline bool decode_png(std::FILE* f, int& width, int& height, int& depth, std::vector<float>& out, PngScratch& s) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &s.message, png_error_to_jmp, png_warning_ignore);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_set_user_limits(png, 1u << 14, 1u << 14);
  png_init_io(png, f);
  png_read_info(png, info);
  const png_byte color = png_get_color_type(png, info);
  depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png), png_set_strip_alpha(png);
  if (depth < 8) depth = 8;
  if (depth == 16) png_set_swap(png);
  png_read_update_info(png, info);
  width = int(png_get_image_width(png, info));
  height = int(png_get_image_height(png, info));
  const std::size_t stride = png_get_rowbytes(png, info);
  s.pixels.resize(stride * height);
  s.rows.resize(height);
  for (int y = 0; y < height; ++y) s.rows[y] = s.pixels.data() + y * stride;
  png_read_image(png, s.rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  const std::size_t n = std::size_t(width) * height * 3;
  out.resize(n);
  if (depth == 16) {
    for (std::size_t i = 0; i < n; ++i) {
      std::uint16_t v;
      std::memcpy(&v, s.pixels.data() + (i / (3 * width)) * stride + 2 * (i % (3 * width)), 2);
      out[i] = float(v) / 65535.0f;
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) out[i] = float(s.pixels[(i / (3 * width)) * stride + i % (3 * width)]) / 255.0f;
  }
  return true;
}

inline bool encode_png(std::FILE* f, int width, int height, int depth, PngScratch& s) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &s.message, png_error_to_jmp, png_warning_ignore);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  s.rows.resize(height);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_init_io(png, f);
  png_set_IHDR(png, info, width, height, depth, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (depth == 16) png_set_swap(png);
  const std::size_t stride = std::size_t(width) * 3 * (depth / 8);
  for (int y = 0; y < height; ++y) s.rows[y] = s.pixels.data() + y * stride;
  png_write_image(png, s.rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

}  // namespace detail

/// Reads an 8- or 16-bit PNG as RGB samples in [0, 1] without any transfer
/// curve. Gray is replicated and alpha dropped.
inline Image<float> read_png(const std::filesystem::path& path, int* bit_depth = nullptr) {
  detail::PngFile file{std::fopen(path.c_str(), "rb")};
  if (!file.f) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  Image<float> img;
  img.channels = 3;
  int depth = 8;
  detail::PngScratch scratch;
  if (!detail::decode_png(file.f, img.width, img.height, depth, img.data, scratch))
    throw Error(ErrorCode::ParseError,
                path.string() + ": " + (scratch.message.empty() ? std::string("corrupt PNG") : scratch.message));
  if (bit_depth) *bit_depth = depth;
  return img;
}

/// Writes RGB samples in [0, 1] (clamped) at 8 or 16 bits.
template <typename T> void write_png(const std::filesystem::path& path, const Image<T>& img, int bit_depth = 8) {
  if (img.channels != 3) throw Error(ErrorCode::ShapeMismatch, "PNG output needs 3 channels");
  if (bit_depth != 8 && bit_depth != 16) throw Error(ErrorCode::InvalidParameter, "PNG bit depth must be 8 or 16");
  const double top = bit_depth == 8 ? 255.0 : 65535.0;
  detail::PngScratch scratch;
  auto& pixels = scratch.pixels;
  pixels.resize(img.data.size() * (bit_depth / 8));
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    const double v = std::isnan(double(img.data[i])) ? 0.0 : std::clamp(double(img.data[i]), 0.0, 1.0);
    const auto q = static_cast<std::uint16_t>(std::lround(v * top));
    if (bit_depth == 8) pixels[i] = static_cast<png_byte>(q);
    else std::memcpy(pixels.data() + 2 * i, &q, 2);
  }
  detail::PngFile file{std::fopen(path.c_str(), "wb")};
  if (!file.f) throw Error(ErrorCode::IoError, "cannot create '" + path.string() + "'");
  if (!detail::encode_png(file.f, img.width, img.height, bit_depth, scratch))
    throw Error(ErrorCode::IoError, path.string() + ": " + scratch.message);
}

/// Linear radiance to an 8-bit display-encoded PNG (x^(1/2.2)).
template <typename T> void save_display_png(const std::filesystem::path& path, const Image<T>& linear) {
  Image<double> enc(linear.width, linear.height, linear.channels);
  for (std::size_t i = 0; i < enc.data.size(); ++i)
    enc.data[i] = std::pow(std::clamp(double(linear.data[i]), 0.0, 1.0), 1.0 / kDisplayGamma);
  write_png(path, enc, 8);
}

/// Inverse of save_display_png.
template <typename T = float> Image<T> load_display_png(const std::filesystem::path& path) {
  const Image<float> enc = read_png(path);
  Image<T> out(enc.width, enc.height, 3);
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = T(std::pow(double(enc.data[i]), kDisplayGamma));
  return out;
}

/// Degree-0 texture from a 16-bit color PNG: DC = (rgb - 0.5) / Y00.
template <typename T = float> TexelMap<T> texture_from_png(const std::filesystem::path& path) {
  const Image<float> img = read_png(path);
  TexelMap<T> map(img.width, img.height, 3);
  for (std::size_t i = 0; i < img.data.size(); ++i) map.data[i] = T((double(img.data[i]) - 0.5) / kShC0);
  return map;
}

/// Opacity map in [0, 1] from the red channel of a PNG, for clamp storage.
template <typename T = float> TexelMap<T> opacity_from_png(const std::filesystem::path& path) {
  const Image<float> img = read_png(path);
  TexelMap<T> map(img.width, img.height, 1);
  for (std::size_t i = 0; i < map.data.size(); ++i) map.data[i] = T(img.data[3 * i]);
  return map;
}

}  // namespace hera::io
