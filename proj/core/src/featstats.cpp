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

#include "robometer/featstats.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <numeric>

#include "robometer/error.hpp"

namespace robometer {
namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void fnv_mix(std::uint64_t& hash, std::uint64_t word) {
  for (int i = 0; i < 8; ++i) {
    hash ^= (word >> (8 * i)) & 0xFF;
    hash *= 0x100000001b3ULL;
  }
}

double mean(std::span<const double> v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

void require_same_length(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::kDimensionMismatch, "samples differ in length");
  if (x.size() < 3) throw Error(ErrorCode::kInsufficientData, "correlation needs >= 3 pairs");
}

}  // namespace

std::string ClassCenters::digest() const {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (const auto& [label, center] : centers) {
    fnv_mix(hash, label);
    for (double v : center) fnv_mix(hash, std::bit_cast<std::uint64_t>(v));
  }
  return hex64(hash);
}

std::string feature_digest(std::span<const float> feature) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (float v : feature) fnv_mix(hash, std::bit_cast<std::uint32_t>(v));
  return hex64(hash);
}

double feature_distance(std::span<const double> a, std::span<const double> b,
                        DistanceMetric metric) {
  if (a.size() != b.size()) throw Error(ErrorCode::kDimensionMismatch, "feature widths differ");
  if (metric == DistanceMetric::kEuclidean) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(sum);
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 1.0;
  return 1.0 - dot / std::sqrt(na * nb);
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::kInsufficientData, "median of empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

ClassCenters class_centers(const FeatureMatrix& features, std::span<const std::uint32_t> labels,
                           std::size_t num_classes) {
  if (labels.size() != features.rows) {
    throw Error(ErrorCode::kDimensionMismatch, "label count differs from feature rows");
  }
  std::map<std::uint32_t, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);
  for (std::uint32_t k = 0; k < num_classes; ++k) {
    if (!members.contains(k)) {
      throw Error(ErrorCode::kInsufficientData, "class " + std::to_string(k) + " has no members");
    }
  }
  ClassCenters result;
  std::vector<double> column;
  for (const auto& [label, rows] : members) {
    std::vector<double> center(features.cols);
    for (std::size_t d = 0; d < features.cols; ++d) {
      column.clear();
      for (std::size_t r : rows) column.push_back(features.row(r)[d]);
      center[d] = median(column);
    }
    result.centers.emplace(label, std::move(center));
  }
  return result;
}

double boundary_ratio(std::span<const float> feature, std::uint32_t own_class,
                      const ClassCenters& centers, DistanceMetric metric) {
  if (centers.centers.size() < 2) {
    throw Error(ErrorCode::kInsufficientData, "boundary ratio needs >= 2 class centers");
  }
  const auto own = centers.centers.find(own_class);
  if (own == centers.centers.end()) {
    throw Error(ErrorCode::kInvalidArgument, "no center for class " + std::to_string(own_class));
  }
  const std::vector<double> point(feature.begin(), feature.end());
  const double same = feature_distance(point, own->second, metric);
  double nearest = std::numeric_limits<double>::infinity();
  for (const auto& [label, center] : centers.centers) {
    if (label == own_class) continue;
    nearest = std::min(nearest, feature_distance(point, center, metric));
  }
  if (nearest == 0.0) return std::numeric_limits<double>::infinity();
  return same / nearest;
}

double cohens_d(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) {
    throw Error(ErrorCode::kInsufficientData, "cohen's d needs >= 2 values per sample");
  }
  const double ma = mean(a), mb = mean(b);
  double ssa = 0.0, ssb = 0.0;
  for (double x : a) ssa += (x - ma) * (x - ma);
  for (double x : b) ssb += (x - mb) * (x - mb);
  const double pooled =
      std::sqrt((ssa + ssb) / static_cast<double>(a.size() + b.size() - 2));
  if (pooled == 0.0) throw Error(ErrorCode::kNumerical, "pooled standard deviation is zero");
  return (ma - mb) / pooled;
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
  std::vector<double> ranks(values.size());
  std::size_t start = 0;
  while (start < order.size()) {
    std::size_t stop = start + 1;
    while (stop < order.size() && values[order[stop]] == values[order[start]]) ++stop;
    // Positions start..stop-1 hold rank start+1..stop.
    const double rank = 0.5 * static_cast<double>(start + 1 + stop);
    for (std::size_t k = start; k < stop; ++k) ranks[order[k]] = rank;
    start = stop;
  }
  return ranks;
}

MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::kInsufficientData, "mann-whitney needs samples");
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::vector<double> ranks = average_ranks(pooled);
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  double rank_sum_a = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) rank_sum_a += ranks[i];

  MannWhitneyResult result;
  result.u_a = rank_sum_a - na * (na + 1.0) / 2.0;
  result.u_b = na * nb - result.u_a;
  result.u = std::min(result.u_a, result.u_b);

  std::vector<double> sorted = pooled;
  std::sort(sorted.begin(), sorted.end());
  double tie_term = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }
  const double n = na + nb;
  const double variance = na * nb / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
  if (!(variance > 0.0)) {
    result.z = 0.0;
    result.p = 1.0;
    return result;
  }
  const double deviation = std::max(0.0, std::abs(result.u_a - na * nb / 2.0) - 0.5);
  result.z = deviation / std::sqrt(variance);
  result.p = std::min(1.0, std::erfc(result.z / std::numbers::sqrt2));
  return result;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  require_same_length(x, y);
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(ErrorCode::kNumerical, "correlation of constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman(std::span<const double> x, std::span<const double> y) {
  require_same_length(x, y);
  const auto rx = average_ranks(x), ry = average_ranks(y);
  return pearson(rx, ry);
}

double diversity_accuracy_correlation(const RobustnessProfile& profile) {
  std::vector<double> acc, lambda;
  for (const auto& p : profile.points) {
    if (!p.diversity_lambda) {
      throw Error(ErrorCode::kInvalidArgument, "profile has no diversity values");
    }
    if (p.neighbor_accuracy >= 1.0) continue;
    acc.push_back(p.neighbor_accuracy);
    lambda.push_back(*p.diversity_lambda);
  }
  if (acc.size() < 3) {
    throw Error(ErrorCode::kInsufficientData,
                "fewer than 3 points below 100% neighbor accuracy");
  }
  return spearman(acc, lambda);
}

std::array<std::size_t, 20> histogram20(std::span<const double> values) {
  std::array<std::size_t, 20> counts{};
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "histogram value outside [0, 1]");
    const auto bin = std::min<std::size_t>(19, static_cast<std::size_t>(std::floor(v * 20.0)));
    ++counts[bin];
  }
  return counts;
}

double cross_model_delta(const RobustnessProfile& a, const RobustnessProfile& b, double delta) {
  if (a.points.size() != b.points.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "profiles cover different point counts");
  }
  if (a.points.empty()) return 1.0;
  std::size_t close = 0;
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    if (std::abs(a.points[i].neighbor_accuracy - b.points[i].neighbor_accuracy) < delta) ++close;
  }
  return static_cast<double>(close) / static_cast<double>(a.points.size());
}

AnalysisReport analyze(const RobustnessProfile& profile, const FeatureMatrix& features,
                       const AnalysisOptions& options, const RobustnessProfile* test_profile,
                       const RobustnessProfile* compare_profile) {
  if (profile.task != Task::kClassification) {
    throw Error(ErrorCode::kInvalidArgument, "feature analysis needs a classification profile");
  }
  if (features.rows != profile.points.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "feature rows differ from profile points");
  }
  AnalysisReport report;
  std::vector<std::uint32_t> labels;
  for (const auto& p : profile.points) labels.push_back(p.label.value_or(0));
  const ClassCenters centers = class_centers(features, labels);
  report.centers_digest = centers.digest();

  const WeakLabeling weak = label_points(profile, options.cutoff);
  std::vector<double> r_weak, r_strong;
  for (std::size_t i = 0; i < profile.points.size(); ++i) {
    const double r = boundary_ratio(features.row(i), labels[i], centers, options.metric);
    report.per_point_r.push_back(r);
    if (!std::isfinite(r)) {
      report.warnings.push_back("point " + std::to_string(i) +
                                " coincides with another class center; ratio is infinite");
      continue;
    }
    (weak.weak_flags[i] ? r_weak : r_strong).push_back(r);
  }
  report.n_weak = r_weak.size();
  report.n_strong = r_strong.size();
  report.r_w = r_weak.empty() ? 0.0 : mean(r_weak);
  report.r_s = r_strong.empty() ? 0.0 : mean(r_strong);

  auto attempt = [&](const char* what, auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      report.warnings.push_back(std::string(what) + ": " + e.what());
    }
  };
  attempt("cohens_d", [&] { report.cohens_d = cohens_d(r_weak, r_strong); });
  attempt("mann_whitney", [&] {
    const auto mwu = mann_whitney_u(r_weak, r_strong);
    report.mwu_u = mwu.u;
    report.mwu_p = mwu.p;
  });
  attempt("spearman_acc_lambda",
          [&] { report.spearman_acc_lambda = diversity_accuracy_correlation(profile); });

  report.histogram_train = histogram20(profile.accuracies());
  if (test_profile != nullptr) report.histogram_test = histogram20(test_profile->accuracies());
  if (compare_profile != nullptr) {
    report.cross_model_fraction = cross_model_delta(profile, *compare_profile);
  }
  return report;
}

nlohmann::ordered_json analysis_to_json(const AnalysisReport& report) {
  auto optional = [](const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
  };
  nlohmann::ordered_json doc;
  doc["centers_digest"] = report.centers_digest;
  nlohmann::ordered_json ratios = nlohmann::ordered_json::array();
  for (double r : report.per_point_r) {
    ratios.push_back(std::isfinite(r) ? nlohmann::ordered_json(r) : nlohmann::ordered_json("inf"));
  }
  doc["per_point_r"] = std::move(ratios);
  doc["r_w"] = report.r_w;
  doc["r_s"] = report.r_s;
  doc["n_weak"] = report.n_weak;
  doc["n_strong"] = report.n_strong;
  doc["cohens_d"] = optional(report.cohens_d);
  doc["mwu_u"] = optional(report.mwu_u);
  doc["mwu_p"] = optional(report.mwu_p);
  doc["spearman_acc_lambda"] = optional(report.spearman_acc_lambda);
  doc["histogram_train"] = report.histogram_train;
  doc["histogram_test"] = report.histogram_test ? nlohmann::ordered_json(*report.histogram_test)
                                                : nlohmann::ordered_json(nullptr);
  if (report.cross_model_fraction) doc["cross_model_fraction"] = *report.cross_model_fraction;
  doc["warnings"] = report.warnings;
  return doc;
}

}  // namespace robometer
