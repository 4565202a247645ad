/* Copyright 2026 The Robometer Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "robometer/transforms.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numeric>

#include "robometer/error.hpp"
#include "test_support.hpp"

namespace robometer {
namespace {

using testing::random_image;
using testing::single_hot;

// Straightforward reference: invert the 2x3 map, sample the four source
// neighbours with zero outside the frame.
Image reference_warp(const Image& src, const AffineMatrix& m) {
  const double det = m[0] * m[4] - m[1] * m[3];
  const double i00 = m[4] / det, i01 = -m[1] / det, i10 = -m[3] / det, i11 = m[0] / det;
  Image out(src.dims);
  const auto h = static_cast<long>(src.dims.height), w = static_cast<long>(src.dims.width);
  auto px = [&](long r, long c, std::size_t ch) -> double {
    if (r < 0 || c < 0 || r >= h || c >= w) return 0.0;
    return src.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c), ch);
  };
  for (long r = 0; r < h; ++r) {
    for (long c = 0; c < w; ++c) {
      const double x = static_cast<double>(c) - m[2], y = static_cast<double>(r) - m[5];
      const double sx = i00 * x + i01 * y, sy = i10 * x + i11 * y;
      const long x0 = static_cast<long>(std::floor(sx)), y0 = static_cast<long>(std::floor(sy));
      const double fx = sx - static_cast<double>(x0), fy = sy - static_cast<double>(y0);
      for (std::size_t ch = 0; ch < src.dims.channels; ++ch) {
        const double v = (1 - fy) * ((1 - fx) * px(y0, x0, ch) + fx * px(y0, x0 + 1, ch)) +
                         fy * ((1 - fx) * px(y0 + 1, x0, ch) + fx * px(y0 + 1, x0 + 1, ch));
        out.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c), ch) =
            static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return out;
}

std::size_t count_components(const std::vector<bool>& mask, std::size_t h, std::size_t w) {
  std::vector<bool> seen(mask.size(), false);
  std::size_t components = 0;
  for (std::size_t start = 0; start < mask.size(); ++start) {
    if (!mask[start] || seen[start]) continue;
    ++components;
    std::vector<std::size_t> stack{start};
    seen[start] = true;
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      const long r = static_cast<long>(p / w), c = static_cast<long>(p % w);
      for (long dr = -1; dr <= 1; ++dr) {
        for (long dc = -1; dc <= 1; ++dc) {
          const long rr = r + dr, cc = c + dc;
          if (rr < 0 || cc < 0 || rr >= static_cast<long>(h) || cc >= static_cast<long>(w)) continue;
          const std::size_t q = static_cast<std::size_t>(rr) * w + static_cast<std::size_t>(cc);
          if (mask[q] && !seen[q]) {
            seen[q] = true;
            stack.push_back(q);
          }
        }
      }
    }
  }
  return components;
}

TEST(AffineMatrixTest, IdentityAndTranslation) {
  const AffineMatrix id = affine_matrix(TransformSpec::spatial(0, 0, 0), 5, 7);
  EXPECT_EQ(id, (AffineMatrix{1, 0, 0, 0, 1, 0}));
  const AffineMatrix shift = affine_matrix(TransformSpec::spatial(0, 1, 0), 5, 7);
  EXPECT_EQ(shift, (AffineMatrix{1, 0, 1, 0, 1, 0}));
}

TEST(AffineMatrixTest, QuarterTurnIsExact) {
  const AffineMatrix m = affine_matrix(TransformSpec::spatial(90, 0, 0), 3, 3);
  // (x=1, y=0) must land on (x=0, y=1).
  EXPECT_EQ(m[0] * 1 + m[1] * 0 + m[2], 0.0);
  EXPECT_EQ(m[3] * 1 + m[4] * 0 + m[5], 1.0);
  for (double v : m) EXPECT_EQ(v, std::round(v));
}

TEST(WarpTest, IdentityIsBitExact) {
  RngStream rng(9);
  for (std::size_t channels : {1u, 3u}) {
    const Image image = random_image({13, 17, channels}, rng);
    const Image out = warp_bilinear(image, affine_matrix(TransformSpec::spatial(0, 0, 0), 17, 13));
    EXPECT_EQ(out, image);
  }
}

TEST(WarpTest, UnitRightTranslation) {
  const Image out =
      warp_bilinear(single_hot(3, 3, 1, 1), affine_matrix(TransformSpec::spatial(0, 1, 0), 3, 3));
  EXPECT_EQ(out, single_hot(3, 3, 1, 2));
  for (std::size_t r = 0; r < 3; ++r) EXPECT_EQ(out.at(r, 0, 0), 0.0f);
}

TEST(WarpTest, QuarterTurnMovesHotPixelWithoutSpread) {
  // Counter-clockwise on screen: top-middle -> left-middle -> bottom-middle.
  const AffineMatrix m = affine_matrix(TransformSpec::spatial(90, 0, 0), 3, 3);
  EXPECT_EQ(warp_bilinear(single_hot(3, 3, 0, 1), m), single_hot(3, 3, 1, 0));
  EXPECT_EQ(warp_bilinear(single_hot(3, 3, 1, 0), m), single_hot(3, 3, 2, 1));
  EXPECT_EQ(warp_bilinear(single_hot(3, 3, 0, 0), m), single_hot(3, 3, 2, 0));
  EXPECT_EQ(warp_bilinear(single_hot(3, 3, 1, 1), m), single_hot(3, 3, 1, 1));
}

TEST(WarpTest, MatchesReferenceSampler) {
  RngStream rng(21);
  for (int trial = 0; trial < 40; ++trial) {
    const Image image = random_image({12, 15, trial % 2 == 0 ? 1u : 3u}, rng);
    const TransformSpec spec = sample_spatial(rng, 15, 12);
    const AffineMatrix m = affine_matrix(spec, 15, 12);
    const Image got = warp_bilinear(image, m);
    const Image want = reference_warp(image, m);
    for (std::size_t i = 0; i < got.pixels.size(); ++i) {
      ASSERT_NEAR(got.pixels[i], want.pixels[i], 1e-5) << "trial " << trial << " pixel " << i;
    }
  }
}

TEST(WarpTest, IntegerShiftNeverAddsMass) {
  RngStream rng(5);
  const Image image = random_image({10, 10, 1}, rng);
  const double before = std::accumulate(image.pixels.begin(), image.pixels.end(), 0.0);
  for (int dx = -3; dx <= 3; ++dx) {
    for (int dy = -3; dy <= 3; ++dy) {
      const Image out = warp_bilinear(image, affine_matrix(TransformSpec::spatial(0, dx, dy), 10, 10));
      const double after = std::accumulate(out.pixels.begin(), out.pixels.end(), 0.0);
      EXPECT_LE(after, before + 1e-6);
    }
  }
}

TEST(WarpTest, ReplicateBoundaryFillsFromEdge) {
  Image image({1, 3, 1}, std::vector<float>{0.2f, 0.4f, 0.6f});
  const Image out = warp_bilinear(image, affine_matrix(TransformSpec::spatial(0, 1, 0), 3, 1),
                                  BoundaryMode::kReplicate);
  EXPECT_EQ(out.pixels, (std::vector<float>{0.2f, 0.2f, 0.4f}));
}

TEST(SampleSpatialTest, RangesFollowImageSize) {
  RngStream rng(1);
  for (int i = 0; i < 10000; ++i) {
    const TransformSpec s = sample_spatial(rng, 30, 30);
    ASSERT_LE(std::abs(s.dx_px), 3.0);
    ASSERT_LE(std::abs(s.dy_px), 3.0);
    ASSERT_LE(std::abs(s.rotation_deg), 30.0);
  }
}

TEST(SampleSpatialTest, DeterministicAndCentred) {
  RngStream a(77), b(77);
  EXPECT_EQ(sample_spatial(a, 32, 32), sample_spatial(b, 32, 32));
  RngStream rng(3);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) sum += sample_spatial(rng, 32, 32).rotation_deg;
  EXPECT_NEAR(sum / n, 0.0, 0.5);
}

TEST(FogTest, ClosedForm) {
  RngStream rng(2);
  const Image image = random_image({4, 4, 3}, rng);
  EXPECT_EQ(apply_fog(image, 0.0), image);
  for (float p : apply_fog(image, 1.0).pixels) EXPECT_EQ(p, 1.0f);
  Image gray({1, 1, 1}, 0.2f);
  EXPECT_NEAR(apply_fog(gray, 0.5).pixels[0], 0.6f, 1e-7);
}

TEST(RainTest, ZeroDensityOnlyDarkens) {
  RngStream rng(3), stream(4);
  const Image image = random_image({8, 8, 1}, rng);
  const Image out = apply_rain(image, 0.0, stream);
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    EXPECT_FLOAT_EQ(out.pixels[i], image.pixels[i] * 0.9f);
  }
}

TEST(RainTest, SameStreamSameOutput) {
  RngStream rng(3);
  const Image image = random_image({16, 16, 3}, rng);
  RngStream a(10), b(10);
  EXPECT_EQ(apply_rain(image, 0.7, a), apply_rain(image, 0.7, b));
}

TEST(RainTest, FullDensityDrawsExactlyMaxStreaks) {
  const Image black({64, 64, 1}, 0.0f);
  for (std::size_t k_max : {4u, 16u, 25u}) {
    TransformOptions options;
    options.rain_max_streaks = k_max;
    RngStream rng(k_max);
    const Image out = apply_rain(black, 1.0, rng, options);
    std::vector<bool> changed(out.pixels.size());
    for (std::size_t i = 0; i < out.pixels.size(); ++i) changed[i] = out.pixels[i] != 0.0f;
    EXPECT_EQ(count_components(changed, 64, 64), k_max);
  }
}

TEST(RainTest, StreakCountScalesWithDensity) {
  const Image black({64, 64, 1}, 0.0f);
  RngStream rng(8);
  const Image out = apply_rain(black, 0.3, rng);  // ceil(0.3 * 16) = 5
  std::vector<bool> changed(out.pixels.size());
  for (std::size_t i = 0; i < out.pixels.size(); ++i) changed[i] = out.pixels[i] != 0.0f;
  EXPECT_EQ(count_components(changed, 64, 64), 5u);
}

TEST(TransformTest, OutputsStayInRangeAndShape) {
  RngStream rng(12);
  const Image image = random_image({16, 16, 3}, rng);
  std::vector<TransformSpec> specs = {TransformSpec::spatial(17.5, 1.2, -0.7),
                                      TransformSpec::fog(0.4), TransformSpec::rain(0.9, 99)};
  for (int i = 0; i < 20; ++i) specs.push_back(sample_spatial(rng, 16, 16));
  for (const auto& spec : specs) {
    const Image out = apply_transform(image, spec);
    ASSERT_EQ(out.dims, image.dims);
    for (float p : out.pixels) {
      ASSERT_GE(p, 0.0f);
      ASSERT_LE(p, 1.0f);
    }
  }
}

TEST(TransformTest, RainSpecUsesItsTag) {
  RngStream rng(12);
  const Image image = random_image({16, 16, 1}, rng);
  EXPECT_EQ(apply_transform(image, TransformSpec::rain(0.5, 7)),
            apply_transform(image, TransformSpec::rain(0.5, 7)));
  EXPECT_NE(apply_transform(image, TransformSpec::rain(0.5, 7)),
            apply_transform(image, TransformSpec::rain(0.5, 8)));
}

TEST(TransformTest, JsonRoundTrip) {
  for (const auto& spec : {TransformSpec::spatial(-12.25, 0.5, 2.0), TransformSpec::fog(0.3),
                           TransformSpec::rain(0.6, 0xFFFFFFFFFFFFULL)}) {
    EXPECT_EQ(transform_from_json(transform_to_json(spec)), spec);
  }
}

TEST(TransformTest, RejectsOutOfRangeWeather) {
  const Image image({2, 2, 1}, 0.5f);
  EXPECT_THROW(apply_fog(image, 1.5), Error);
  RngStream rng(1);
  EXPECT_THROW(apply_rain(image, -0.1, rng), Error);
}

}  // namespace
}  // namespace robometer
