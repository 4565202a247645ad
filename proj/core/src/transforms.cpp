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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "robometer/error.hpp"

namespace robometer {
namespace {

// sin/cos of exact multiples of 90 degrees are snapped so those rotations
// land on integer pixel positions.
double snap_unit(double v) {
  constexpr double kTol = 1e-12;
  if (std::abs(v) < kTol) return 0.0;
  if (std::abs(v - 1.0) < kTol) return 1.0;
  if (std::abs(v + 1.0) < kTol) return -1.0;
  return v;
}

double snap_integer(double v) {
  const double r = std::round(v);
  return std::abs(v - r) < 1e-9 ? r : v;
}

void check_unit_interval(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, std::string(what) + " must be in [0, 1]");
  }
}

}  // namespace

TransformSpec TransformSpec::spatial(double rotation_deg, double dx_px, double dy_px) {
  TransformSpec s;
  s.kind = TransformKind::kSpatial;
  s.rotation_deg = rotation_deg;
  s.dx_px = dx_px;
  s.dy_px = dy_px;
  return s;
}

TransformSpec TransformSpec::fog(double intensity) {
  TransformSpec s;
  s.kind = TransformKind::kFog;
  s.fog_intensity = intensity;
  return s;
}

TransformSpec TransformSpec::rain(double density, std::uint64_t rng_tag) {
  TransformSpec s;
  s.kind = TransformKind::kRain;
  s.rain_density = density;
  s.rng_tag = rng_tag;
  return s;
}

std::string transform_kind_name(TransformKind kind) {
  switch (kind) {
    case TransformKind::kSpatial: return "spatial";
    case TransformKind::kFog: return "fog";
    case TransformKind::kRain: return "rain";
  }
  return "unknown";
}

nlohmann::json transform_to_json(const TransformSpec& spec) {
  nlohmann::json doc = {{"kind", transform_kind_name(spec.kind)}};
  switch (spec.kind) {
    case TransformKind::kSpatial:
      doc["rotation_deg"] = spec.rotation_deg;
      doc["dx_px"] = spec.dx_px;
      doc["dy_px"] = spec.dy_px;
      break;
    case TransformKind::kFog:
      doc["fog_intensity"] = spec.fog_intensity;
      break;
    case TransformKind::kRain:
      doc["rain_density"] = spec.rain_density;
      doc["rng_tag"] = spec.rng_tag;
      break;
  }
  return doc;
}

TransformSpec transform_from_json(const nlohmann::json& doc) {
  const auto kind = doc.at("kind").get<std::string>();
  if (kind == "spatial") {
    return TransformSpec::spatial(doc.at("rotation_deg").get<double>(), doc.at("dx_px").get<double>(),
                                  doc.at("dy_px").get<double>());
  }
  if (kind == "fog") return TransformSpec::fog(doc.at("fog_intensity").get<double>());
  if (kind == "rain") {
    return TransformSpec::rain(doc.at("rain_density").get<double>(),
                               doc.at("rng_tag").get<std::uint64_t>());
  }
  throw Error(ErrorCode::kFormat, "unknown transform kind: " + kind);
}

TransformSpec sample_spatial(RngStream& rng, std::size_t width, std::size_t height,
                             const TransformOptions& options) {
  const double max_dx = options.max_shift_fraction * static_cast<double>(width);
  const double max_dy = options.max_shift_fraction * static_cast<double>(height);
  const double rotation = rng.uniform(-options.max_rotation_deg, options.max_rotation_deg);
  const double dx = rng.uniform(-max_dx, max_dx);
  const double dy = rng.uniform(-max_dy, max_dy);
  return TransformSpec::spatial(rotation, dx, dy);
}

AffineMatrix affine_matrix(const TransformSpec& spec, std::size_t width, std::size_t height) {
  if (spec.kind != TransformKind::kSpatial) {
    throw Error(ErrorCode::kInvalidArgument, "affine_matrix needs a spatial transform");
  }
  const double theta = spec.rotation_deg * std::numbers::pi / 180.0;
  const double c = snap_unit(std::cos(theta));
  const double s = snap_unit(std::sin(theta));
  const double cx = (static_cast<double>(width) - 1.0) / 2.0;
  const double cy = (static_cast<double>(height) - 1.0) / 2.0;
  // dst = R (src - centre) + centre + t, with R = [c s; -s c] in y-down coordinates.
  return {c, s, cx - c * cx - s * cy + spec.dx_px,
          -s, c, cy + s * cx - c * cy + spec.dy_px};
}

Image warp_bilinear(const Image& image, const AffineMatrix& m, BoundaryMode boundary) {
  const auto [h, w, ch] = image.dims;
  const double det = m[0] * m[4] - m[1] * m[3];
  if (std::abs(det) < 1e-12) throw Error(ErrorCode::kInvalidArgument, "singular affine matrix");
  // Inverse of the linear part.
  const double i00 = m[4] / det, i01 = -m[1] / det;
  const double i10 = -m[3] / det, i11 = m[0] / det;

  Image out(image.dims);
  const auto hi = static_cast<std::ptrdiff_t>(h);
  const auto wi = static_cast<std::ptrdiff_t>(w);
  auto sample = [&](std::ptrdiff_t r, std::ptrdiff_t c, std::size_t k) -> double {
    if (r < 0 || r >= hi || c < 0 || c >= wi) {
      if (boundary == BoundaryMode::kZero) return 0.0;
      r = std::clamp<std::ptrdiff_t>(r, 0, hi - 1);
      c = std::clamp<std::ptrdiff_t>(c, 0, wi - 1);
    }
    return image.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c), k);
  };

  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      const double tx = static_cast<double>(c) - m[2];
      const double ty = static_cast<double>(r) - m[5];
      const double sx = snap_integer(i00 * tx + i01 * ty);
      const double sy = snap_integer(i10 * tx + i11 * ty);
      const double fx = std::floor(sx), fy = std::floor(sy);
      const double ax = sx - fx, ay = sy - fy;
      const auto x0 = static_cast<std::ptrdiff_t>(fx);
      const auto y0 = static_cast<std::ptrdiff_t>(fy);
      for (std::size_t k = 0; k < ch; ++k) {
        double v = (1.0 - ax) * (1.0 - ay) * sample(y0, x0, k);
        if (ax != 0.0) v += ax * (1.0 - ay) * sample(y0, x0 + 1, k);
        if (ay != 0.0) v += (1.0 - ax) * ay * sample(y0 + 1, x0, k);
        if (ax != 0.0 && ay != 0.0) v += ax * ay * sample(y0 + 1, x0 + 1, k);
        out.at(r, c, k) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return out;
}

Image apply_fog(const Image& image, double intensity) {
  check_unit_interval(intensity, "fog intensity");
  Image out = image;
  for (float& v : out.pixels) {
    v = static_cast<float>(std::clamp((1.0 - intensity) * v + intensity, 0.0, 1.0));
  }
  return out;
}

Image apply_rain(const Image& image, double density, RngStream& rng,
                 const TransformOptions& options) {
  check_unit_interval(density, "rain density");
  Image out = image;
  for (float& v : out.pixels) v = static_cast<float>(v * options.rain_brightness);

  const auto [h, w, ch] = image.dims;
  // Narrow images get fewer bands than K_max; bands are at least 2 columns.
  const std::size_t n_bands = std::min(options.rain_max_streaks, w / 2);
  const auto n_streaks = std::min(
      n_bands, static_cast<std::size_t>(
                   std::ceil(density * static_cast<double>(options.rain_max_streaks))));
  if (n_streaks == 0) return out;

  // Each streak owns one column band; the band's last column stays clear.
  const std::size_t band = w / n_bands;
  std::vector<std::size_t> bands(n_bands);
  std::iota(bands.begin(), bands.end(), 0);
  rng.shuffle(bands);

  constexpr double kStreakValue = 0.85;
  constexpr double kStreakAlpha = 0.6;
  for (std::size_t s = 0; s < n_streaks; ++s) {
    const std::size_t lo = bands[s] * band;
    const std::size_t hi_col = lo + band - 2;  // inclusive
    const auto length = std::max<std::size_t>(
        2, static_cast<std::size_t>(std::lround(rng.uniform(0.15, 0.35) * static_cast<double>(h))));
    const std::size_t top = static_cast<std::size_t>(rng.below(h - std::min(h - 1, length) ));
    const double slant = rng.uniform(-0.15, 0.15);
    const double x0 = rng.uniform(static_cast<double>(lo), static_cast<double>(hi_col) + 1.0);
    for (std::size_t t = 0; t < length && top + t < h; ++t) {
      const double x = std::clamp(x0 + slant * static_cast<double>(t), static_cast<double>(lo),
                                  static_cast<double>(hi_col));
      const auto col = static_cast<std::size_t>(std::floor(x));
      for (std::size_t k = 0; k < ch; ++k) {
        float& p = out.at(top + t, col, k);
        p = static_cast<float>((1.0 - kStreakAlpha) * p + kStreakAlpha * kStreakValue);
      }
    }
  }
  return out;
}

Image apply_transform(const Image& image, const TransformSpec& spec,
                      const TransformOptions& options) {
  switch (spec.kind) {
    case TransformKind::kSpatial:
      return warp_bilinear(image, affine_matrix(spec, image.dims.width, image.dims.height),
                           options.boundary);
    case TransformKind::kFog:
      return apply_fog(image, spec.fog_intensity);
    case TransformKind::kRain: {
      RngStream rng(spec.rng_tag);
      return apply_rain(image, spec.rain_density, rng, options);
    }
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown transform kind");
}

}  // namespace robometer
