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

#include "robometer/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "robometer/error.hpp"
#include "robometer/rng.hpp"

namespace robometer {
namespace {

struct ShapeJitter {
  double cx = 0.0;  // centre offset in normalized units
  double cy = 0.0;
  double extent = 0.6;
  double thickness = 0.12;
  double amplitude = 1.0;
};

double segment_distance(double px, double py, double ax, double ay, double bx, double by) {
  const double vx = bx - ax, vy = by - ay;
  const double t = std::clamp(((px - ax) * vx + (py - ay) * vy) / (vx * vx + vy * vy), 0.0, 1.0);
  return std::hypot(px - (ax + t * vx), py - (ay + t * vy));
}

// Distance from (u, v) to the stroke of the shape, in normalized units
// where the image spans [-1, 1].
double shape_distance(std::size_t shape, double u, double v, const ShapeJitter& j) {
  const double e = j.extent;
  switch (shape) {
    case 0: return segment_distance(u, v, -e, 0, e, 0);
    case 1: return std::min(segment_distance(u, v, -e, 0, e, 0), segment_distance(u, v, 0, -e, 0, e));
    case 2: return std::abs(std::hypot(u, v) - 0.75 * e);
    case 3: return std::max(std::hypot(u, v) - 0.55 * e, 0.0);
    case 4: return segment_distance(u, v, 0, -e, 0, e);
    case 5: return segment_distance(u, v, -0.75 * e, -0.75 * e, 0.75 * e, 0.75 * e);
    case 6: return std::abs(std::max(std::abs(u), std::abs(v)) - 0.7 * e);
    case 7:
      return std::min(segment_distance(u, v, -0.7 * e, -0.7 * e, -0.7 * e, 0.7 * e),
                      segment_distance(u, v, -0.7 * e, 0.7 * e, 0.7 * e, 0.7 * e));
    default: throw Error(ErrorCode::kInvalidArgument, "unknown shape");
  }
}

ShapeJitter sample_jitter(RngStream& rng) {
  ShapeJitter j;
  j.cx = rng.uniform(-0.12, 0.12);
  j.cy = rng.uniform(-0.12, 0.12);
  j.extent = rng.uniform(0.5, 0.7);
  j.thickness = rng.uniform(0.10, 0.16);
  j.amplitude = rng.uniform(0.75, 1.0);
  return j;
}

// Single-channel intensity plane for one shape.
std::vector<double> render_plane(std::size_t shape, std::size_t side, const ShapeJitter& j) {
  std::vector<double> plane(side * side);
  const double half = static_cast<double>(side) / 2.0;
  const double centre = (static_cast<double>(side) - 1.0) / 2.0;
  const double softness = 1.0 / half;  // one pixel of anti-aliasing
  for (std::size_t r = 0; r < side; ++r) {
    for (std::size_t c = 0; c < side; ++c) {
      const double u = (static_cast<double>(c) - centre) / half - j.cx;
      const double v = (static_cast<double>(r) - centre) / half - j.cy;
      const double d = shape_distance(shape, u, v, j);
      const double coverage = std::clamp((j.thickness - d) / softness + 0.5, 0.0, 1.0);
      plane[r * side + c] = j.amplitude * coverage;
    }
  }
  return plane;
}

Image plane_to_image(const std::vector<double>& plane, std::size_t side, std::size_t channels,
                     RngStream& rng) {
  std::vector<double> tint(channels, 1.0);
  if (channels > 1) {
    for (auto& t : tint) t = rng.uniform(0.6, 1.0);
  }
  Image image({side, side, channels});
  for (std::size_t p = 0; p < side * side; ++p) {
    for (std::size_t ch = 0; ch < channels; ++ch) {
      const double noise = rng.uniform(0.0, 0.04);
      image.pixels[p * channels + ch] =
          static_cast<float>(std::clamp(plane[p] * tint[ch] + noise, 0.0, 1.0));
    }
  }
  return image;
}

void check_config(const SyntheticConfig& config) {
  if (config.n_points == 0) throw Error(ErrorCode::kInvalidArgument, "n_points must be >= 1");
  if (config.n_classes < 2 || config.n_classes > synthetic_class_names().size()) {
    throw Error(ErrorCode::kInvalidArgument, "n_classes must be in 2..8");
  }
  if (config.image_side < 16) throw Error(ErrorCode::kInvalidArgument, "image_side must be >= 16");
  if (!(config.ambiguity_fraction >= 0.0 && config.ambiguity_fraction <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "ambiguity_fraction must be in [0, 1]");
  }
  if (config.channels != 1 && config.channels != 3) {
    throw Error(ErrorCode::kInvalidArgument, "channels must be 1 or 3");
  }
}

}  // namespace

Image render_shape(std::size_t shape, std::size_t side, std::size_t channels, std::uint64_t seed) {
  RngStream rng(seed);
  const ShapeJitter j = sample_jitter(rng);
  return plane_to_image(render_plane(shape, side, j), side, channels, rng);
}

Dataset generate_synthetic_dataset(const SyntheticConfig& config) {
  check_config(config);
  const std::size_t n = config.n_points;
  RngStream rng(config.seed);

  std::vector<std::uint32_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<std::uint32_t>(i % config.n_classes);
  rng.shuffle(labels);

  const auto n_blended = static_cast<std::size_t>(
      std::llround(static_cast<double>(n) * config.ambiguity_fraction));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  std::vector<std::size_t> blended(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_blended));
  std::sort(blended.begin(), blended.end());
  std::vector<bool> is_blended(n, false);
  for (std::size_t i : blended) is_blended[i] = true;

  Dataset dataset;
  dataset.task = Task::kClassification;
  dataset.num_classes = config.n_classes;
  dataset.image_dims = {config.image_side, config.image_side, config.channels};
  dataset.labels = labels;
  dataset.class_names.assign(synthetic_class_names().begin(),
                             synthetic_class_names().begin() +
                                 static_cast<std::ptrdiff_t>(config.n_classes));
  dataset.images.reserve(n);

  std::vector<std::uint32_t> partners;
  std::vector<double> weights;
  for (std::size_t i = 0; i < n; ++i) {
    RngStream point_rng = RngStream::for_point(config.seed, i);
    std::vector<double> plane =
        render_plane(labels[i], config.image_side, sample_jitter(point_rng));
    if (is_blended[i]) {
      auto partner = static_cast<std::uint32_t>(point_rng.below(config.n_classes - 1));
      if (partner >= labels[i]) ++partner;
      const double alpha = point_rng.uniform(0.5, 0.6);
      const std::vector<double> other =
          render_plane(partner, config.image_side, sample_jitter(point_rng));
      for (std::size_t p = 0; p < plane.size(); ++p) {
        plane[p] = alpha * plane[p] + (1.0 - alpha) * other[p];
      }
      partners.push_back(partner);
      weights.push_back(alpha);
    }
    dataset.images.push_back(plane_to_image(plane, config.image_side, config.channels, point_rng));
  }

  dataset.metadata = {
      {"generator", "synthetic"},
      {"seed", config.seed},
      {"n_points", n},
      {"image_side", config.image_side},
      {"n_classes", config.n_classes},
      {"channels", config.channels},
      {"ambiguity_fraction", config.ambiguity_fraction},
      {"blended_count", n_blended},
      {"blended_indices", blended},
      {"blend_partners", partners},
      {"blend_weights", weights},
  };
  return dataset;
}

}  // namespace robometer
