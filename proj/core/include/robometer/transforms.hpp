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

#pragma once

#include <array>
#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "robometer/image.hpp"
#include "robometer/rng.hpp"

namespace robometer {

enum class TransformKind { kSpatial, kFog, kRain };

/// One sampled natural variation. Spatial transforms use rotation/offsets;
/// weather transforms use their intensity and ignore the spatial fields.
struct TransformSpec {
  TransformKind kind = TransformKind::kSpatial;
  double rotation_deg = 0.0;
  double dx_px = 0.0;
  double dy_px = 0.0;
  double fog_intensity = 0.0;
  double rain_density = 0.0;
  std::uint64_t rng_tag = 0;

  static TransformSpec spatial(double rotation_deg, double dx_px, double dy_px);
  static TransformSpec fog(double intensity);
  static TransformSpec rain(double density, std::uint64_t rng_tag);

  friend bool operator==(const TransformSpec&, const TransformSpec&) = default;
};

std::string transform_kind_name(TransformKind kind);
nlohmann::json transform_to_json(const TransformSpec& spec);
TransformSpec transform_from_json(const nlohmann::json& doc);

enum class BoundaryMode { kZero, kReplicate };

struct TransformOptions {
  double max_rotation_deg = 30.0;
  double max_shift_fraction = 0.1;
  BoundaryMode boundary = BoundaryMode::kZero;
  std::size_t rain_max_streaks = 16;
  double rain_brightness = 0.9;
};

/// Row-major 2x3 affine map from source (x=col, y=row) to destination.
using AffineMatrix = std::array<double, 6>;

/// rotation ~ U(-30, 30) deg, dx ~ U(-0.1 w, 0.1 w), dy ~ U(-0.1 h, 0.1 h).
TransformSpec sample_spatial(RngStream& rng, std::size_t width, std::size_t height,
                             const TransformOptions& options = {});

/// Translate after rotating about the image centre, combined into one map.
/// Positive angles turn content counter-clockwise on screen; positive dx
/// moves content right and positive dy moves it down.
AffineMatrix affine_matrix(const TransformSpec& spec, std::size_t width, std::size_t height);

/// Inverse-mapped bilinear resampling; out-of-frame samples use the boundary
/// mode, output clamped to [0, 1].
Image warp_bilinear(const Image& image, const AffineMatrix& matrix,
                    BoundaryMode boundary = BoundaryMode::kZero);

/// out = (1 - intensity) * in + intensity
Image apply_fog(const Image& image, double intensity);

/// Darkens by options.rain_brightness, then draws ceil(density * K_max)
/// (capped at width / 2)
/// one-pixel streaks. Streak k stays inside its own column band, so streaks
/// never touch each other.
Image apply_rain(const Image& image, double density, RngStream& rng,
                 const TransformOptions& options = {});

/// Applies any spec; rain derives its stream from spec.rng_tag.
Image apply_transform(const Image& image, const TransformSpec& spec,
                      const TransformOptions& options = {});

}  // namespace robometer
