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

#include <cstddef>
#include <span>
#include <vector>

namespace robometer {

struct ImageDims {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;

  std::size_t size() const { return height * width * channels; }
  friend bool operator==(const ImageDims&, const ImageDims&) = default;
};

/// Channels-last (H, W, C) image with values in [0, 1].
struct Image {
  ImageDims dims;
  std::vector<float> pixels;

  Image() = default;
  explicit Image(ImageDims d, float fill = 0.0f) : dims(d), pixels(d.size(), fill) {}
  Image(ImageDims d, std::vector<float> values);

  float& at(std::size_t row, std::size_t col, std::size_t ch) {
    return pixels[(row * dims.width + col) * dims.channels + ch];
  }
  float at(std::size_t row, std::size_t col, std::size_t ch) const {
    return pixels[(row * dims.width + col) * dims.channels + ch];
  }

  friend bool operator==(const Image&, const Image&) = default;
};

/// Row-major N x D matrix of f32 features.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> values;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0f) {}

  std::span<const float> row(std::size_t i) const {
    return std::span<const float>(values).subspan(i * cols, cols);
  }
  std::span<float> row(std::size_t i) { return std::span<float>(values).subspan(i * cols, cols); }
};

}  // namespace robometer
