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

#include "test_support.hpp"

#include <gtest/gtest.h>

namespace hera {
namespace {

using testing::Rng;

Image<double> random_image(Rng& rng, int w, int h, double lo = 0.0, double hi = 1.0) {
  Image<double> img(w, h, 3);
  for (auto& v : img.data) v = testing::uniform(rng, lo, hi);
  return img;
}

// Direct 11x11 window SSIM with zero padding, no separable filtering.
double reference_ssim(const Image<double>& a, const Image<double>& b) {
  double kernel[11][11];
  double ksum = 0;
  for (int i = 0; i < 11; ++i)
    for (int j = 0; j < 11; ++j) {
      kernel[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / (2 * 1.5 * 1.5));
      ksum += kernel[i][j];
    }
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double total = 0;
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < a.height; ++y)
      for (int x = 0; x < a.width; ++x) {
        double mx = 0, my = 0, xx = 0, yy = 0, xy = 0;
        for (int i = 0; i < 11; ++i)
          for (int j = 0; j < 11; ++j) {
            const int px = x + j - 5, py = y + i - 5;
            if (px < 0 || py < 0 || px >= a.width || py >= a.height) continue;
            const double w = kernel[i][j] / ksum;
            const double u = a.at(px, py, c), v = b.at(px, py, c);
            mx += w * u;
            my += w * v;
            xx += w * u * u;
            yy += w * v * v;
            xy += w * u * v;
          }
        const double vx = xx - mx * mx, vy = yy - my * my, cxy = xy - mx * my;
        total += (2 * mx * my + c1) * (2 * cxy + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      }
  return total / (3.0 * a.width * a.height);
}

TEST(PhotometricLoss, IdenticalIsZero) {
  Rng rng(1);
  const auto a = random_image(rng, 20, 13);
  EXPECT_NEAR(photometric_loss(a, a, 0.2), 0.0, 1e-12);
  EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
}

TEST(PhotometricLoss, PureL1Offset) {
  Rng rng(2);
  const auto a = random_image(rng, 10, 10, 0.0, 0.8);
  auto b = a;
  for (auto& v : b.data) v += 0.1;
  EXPECT_NEAR(photometric_loss(b, a, 0.0), 0.1, 1e-12);
}

TEST(PhotometricLoss, SizeMismatch) {
  try {
    photometric_loss(Image<double>(4, 4, 3), Image<double>(4, 5, 3), 0.2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SizeMismatch);
  }
}

TEST(Ssim, MatchesDirectWindowReference) {
  Rng rng(3);
  const auto a = random_image(rng, 16, 16);
  auto b = a;
  for (auto& v : b.data) v = std::clamp(v + testing::uniform(rng, -0.2, 0.2), 0.0, 1.0);
  const double expected = reference_ssim(a, b);
  EXPECT_NEAR(ssim(a, b), expected, 1e-6);
  EXPECT_NEAR(ssim(a.cast<float>(), b.cast<float>()), expected, 1e-5);
  const auto c = random_image(rng, 16, 16);
  EXPECT_NEAR(ssim(a, c), reference_ssim(a, c), 1e-6);
}

TEST(Ssim, GradientMatchesFiniteDifferences) {
  Rng rng(4);
  const auto a = random_image(rng, 14, 9);
  const auto b = random_image(rng, 14, 9);
  Image<double> grad;
  photometric_loss(a, b, 0.2, &grad);
  const double h = 1e-6;
  for (std::size_t i = 0; i < a.data.size(); i += 7) {
    auto p = a, m = a;
    p.data[i] += h;
    m.data[i] -= h;
    const double numeric = (photometric_loss(p, b, 0.2) - photometric_loss(m, b, 0.2)) / (2 * h);
    EXPECT_NEAR(grad.data[i], numeric, 1e-7 + 1e-4 * std::abs(numeric)) << i;
  }
}

TEST(Psnr, Examples) {
  Image<double> a(8, 8, 3, 0.5);
  EXPECT_TRUE(std::isinf(psnr(a, a)));
  auto b = a;
  for (auto& v : b.data) v += 0.1;
  EXPECT_NEAR(psnr(a, b), 20.0, 1e-9);
}

}  // namespace
}  // namespace hera
