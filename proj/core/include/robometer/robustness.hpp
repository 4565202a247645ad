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
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "robometer/dataset.hpp"
#include "robometer/image.hpp"
#include "robometer/model_iface.hpp"
#include "robometer/rng.hpp"
#include "robometer/transforms.hpp"

namespace robometer {

enum class NeighborRecipe { kSpatial, kRainFogMix };

std::string recipe_name(NeighborRecipe recipe);
NeighborRecipe parse_recipe(const std::string& name);

struct Neighbor {
  TransformSpec spec;
  Image image;
};

/// Spatial: m independent sample_spatial draws. Rain/fog mix: ceil(m/2) rain
/// then floor(m/2) fog, intensities ~ U(0.2, 0.8).
std::vector<Neighbor> generate_neighbors(const Image& image, std::size_t m, RngStream& rng,
                                         NeighborRecipe recipe,
                                         const TransformOptions& options = {});

/// Every neighbor uses the same given spec.
std::vector<Neighbor> generate_neighbors(const Image& image, std::size_t m,
                                         const TransformSpec& forced,
                                         const TransformOptions& options = {});

bool classification_correct(const Prediction& prediction, std::uint32_t true_label);

/// |neighbor - original| <= epsilon (closed interval).
bool regression_correct(double neighbor_output, double original_output, double epsilon);

/// Mean of the flags over the original point and its neighbors.
double neighbor_accuracy(const std::vector<bool>& correct_flags);

/// Simpson index sum_i (count_i / n)^2 over predicted classes.
double simpson_lambda(std::span<const std::uint32_t> predicted_classes, std::size_t num_classes);

struct PointProfile {
  std::size_t index = 0;
  std::optional<std::uint32_t> label;  // classification only
  bool original_correct = false;
  std::uint32_t predicted = 0;         // classification top-1 of the original
  double top1_confidence = 0.0;
  double original_output = 0.0;        // regression output of the original
  /// Predicted class per image, original first (classification).
  std::vector<std::uint32_t> neighbor_predictions;
  /// Correctness per image, original first.
  std::vector<bool> neighbor_correct;
  double neighbor_accuracy = 0.0;
  std::optional<double> diversity_lambda;  // classification only
  std::vector<TransformSpec> transform_specs;
  std::string transforms_digest;
  std::optional<std::vector<float>> features;  // penultimate features of the original
};

struct RobustnessProfile {
  std::string model_name;
  std::string dataset_id;
  Task task = Task::kClassification;
  std::size_t num_classes = 0;
  std::size_t m = 0;
  std::uint64_t seed = 0;
  NeighborRecipe recipe = NeighborRecipe::kSpatial;
  double epsilon = 0.0;
  std::vector<PointProfile> points;

  std::vector<double> accuracies() const;
  std::vector<double> lambdas() const;  // throws kInvalidArgument for regression
  std::optional<FeatureMatrix> features() const;
};

struct ProfileOptions {
  std::size_t m = 50;
  std::uint64_t seed = 0;
  NeighborRecipe recipe = NeighborRecipe::kSpatial;
  double epsilon = 0.1;
  std::size_t threads = 1;
  bool want_features = true;
  std::optional<TransformSpec> forced_spec;
  TransformOptions transform;
  std::string dataset_id = "dataset";
};

/// Per-point streams are RngStream::for_point(seed, index), so the result
/// does not depend on the thread count. Any adapter failure aborts the whole
/// profile.
RobustnessProfile profile_dataset(ModelUnderTest& model, const Dataset& dataset,
                                  const ProfileOptions& options);

struct WeakLabeling {
  double cutoff = 0.0;
  std::vector<bool> weak_flags;

  std::vector<std::size_t> weak_indices() const;
  std::size_t weak_count() const;
};

/// weak <=> neighbor_accuracy < cutoff
WeakLabeling label_points(const RobustnessProfile& profile, double cutoff);

/// FNV-1a digest of the serialized specs, 16 hex digits.
std::string transforms_digest(std::span<const TransformSpec> specs);

// Profile report: one JSON record per point, plus a header document holding
// everything that is not per point.
nlohmann::ordered_json point_to_json(const PointProfile& point, std::size_t m);
void write_profile_jsonl(const RobustnessProfile& profile, std::ostream& out);
void write_profile_csv(const RobustnessProfile& profile, std::ostream& out);
nlohmann::ordered_json profile_header(const RobustnessProfile& profile);

/// Reads a header document plus JSONL records back into a profile. Neighbor
/// predictions and specs are not stored in the report and stay empty.
RobustnessProfile read_profile(const nlohmann::json& header, std::istream& records);

}  // namespace robometer
