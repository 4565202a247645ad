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

#include <cstdint>
#include <string>
#include <vector>

#include "robometer/dataset.hpp"

namespace robometer {

/// Shape classes rendered by the synthetic generator, in label order.
inline const std::vector<std::string>& synthetic_class_names() {
  static const std::vector<std::string> names = {"bar",      "cross", "ring",  "blob",
                                                 "vertical", "diagonal", "frame", "corner"};
  return names;
}

struct SyntheticConfig {
  std::size_t n_points = 200;
  std::size_t image_side = 16;
  std::size_t n_classes = 4;
  double ambiguity_fraction = 0.0;
  std::uint64_t seed = 0;
  std::size_t channels = 1;  // 1 (grayscale) or 3 (tinted RGB)
};

/// Renders jittered shape images. round(n_points * ambiguity_fraction)
/// points are alpha-blends of their labelled class with a second class
/// (weight of the labelled class in [0.5, 0.6]); their indices, partners
/// and weights are recorded in the dataset metadata. Pure function of the
/// config.
Dataset generate_synthetic_dataset(const SyntheticConfig& config);

/// Renders a single pure shape; exposed for tests and benchmarks.
Image render_shape(std::size_t shape, std::size_t side, std::size_t channels,
                   std::uint64_t seed);

}  // namespace robometer
