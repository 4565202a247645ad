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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "robometer/image.hpp"
#include "robometer/robustness.hpp"

namespace robometer {

/// Coordinate-wise median feature vector per class.
struct ClassCenters {
  std::map<std::uint32_t, std::vector<double>> centers;

  std::string digest() const;
};

enum class DistanceMetric { kEuclidean, kCosine };

double feature_distance(std::span<const double> a, std::span<const double> b,
                        DistanceMetric metric = DistanceMetric::kEuclidean);

/// Median of a sample; even sizes average the two middle values.
double median(std::vector<double> values);

/// When num_classes > 0 every class in [0, num_classes) must have a member;
/// otherwise centers are built for the classes that occur.
ClassCenters class_centers(const FeatureMatrix& features, std::span<const std::uint32_t> labels,
                           std::size_t num_classes = 0);

/// distance to own centre / distance to the nearest other centre. Returns
/// +infinity when the point sits on another class's centre.
double boundary_ratio(std::span<const float> feature, std::uint32_t own_class,
                      const ClassCenters& centers,
                      DistanceMetric metric = DistanceMetric::kEuclidean);

/// (mean_a - mean_b) / pooled standard deviation.
double cohens_d(std::span<const double> a, std::span<const double> b);

struct MannWhitneyResult {
  double u = 0.0;    // min(u_a, u_b)
  double u_a = 0.0;  // pairs with a > b, ties counted 1/2
  double u_b = 0.0;
  double z = 0.0;
  double p = 1.0;    // two-sided, normal approximation, tie and continuity corrected
};

MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b);

/// 1-based ranks, ties receive their average rank.
std::vector<double> average_ranks(std::span<const double> values);

double pearson(std::span<const double> x, std::span<const double> y);
double spearman(std::span<const double> x, std::span<const double> y);

/// Spearman between neighbor accuracy and lambda over points whose accuracy
/// is below 1.
double diversity_accuracy_correlation(const RobustnessProfile& profile);

/// Bins [0, 0.05), ..., [0.95, 1.0]; the top bin is closed.
std::array<std::size_t, 20> histogram20(std::span<const double> values);

/// Share of points whose accuracy differs by less than delta between profiles.
double cross_model_delta(const RobustnessProfile& a, const RobustnessProfile& b,
                         double delta = 0.2);

struct AnalysisOptions {
  double cutoff = 0.75;
  DistanceMetric metric = DistanceMetric::kEuclidean;
};

struct AnalysisReport {
  std::string centers_digest;
  std::vector<double> per_point_r;
  double r_w = 0.0;
  double r_s = 0.0;
  std::size_t n_weak = 0;
  std::size_t n_strong = 0;
  std::optional<double> cohens_d;
  std::optional<double> mwu_u;
  std::optional<double> mwu_p;
  std::optional<double> spearman_acc_lambda;
  std::array<std::size_t, 20> histogram_train{};
  std::optional<std::array<std::size_t, 20>> histogram_test;
  std::optional<double> cross_model_fraction;
  std::vector<std::string> warnings;
};

/// Boundary ratios use the profile's true labels; means skip infinite ratios
/// (each one adds a warning). Statistics that cannot be computed on the
/// given data are left empty with a warning.
AnalysisReport analyze(const RobustnessProfile& profile, const FeatureMatrix& features,
                       const AnalysisOptions& options,
                       const RobustnessProfile* test_profile = nullptr,
                       const RobustnessProfile* compare_profile = nullptr);

nlohmann::ordered_json analysis_to_json(const AnalysisReport& report);

/// FNV-1a digest of one feature vector, 16 hex digits.
std::string feature_digest(std::span<const float> feature);

}  // namespace robometer
