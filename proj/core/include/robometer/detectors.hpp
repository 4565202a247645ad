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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "robometer/image.hpp"
#include "robometer/model_iface.hpp"
#include "robometer/nn.hpp"
#include "robometer/rng.hpp"
#include "robometer/robustness.hpp"

namespace robometer {

// ---------------------------------------------------------------------------
// Black-box detector: threshold on the Simpson index of fresh neighbors.

struct BThreshold {
  double cutoff_used = 0.75;
  double lambda_threshold = 0.0;
  std::size_t m_b = 50;
  bool no_weak_points = false;  // set when calibration saw no weak point
  std::size_t calibration_points = 0;
  std::string calibration_digest;
};

/// lambda_threshold = max lambda over the points that are weak at `cutoff`.
BThreshold calibrate_b(const RobustnessProfile& profile, double cutoff, std::size_t m_b = 50,
                       std::span<const std::size_t> indices = {});

enum class Verdict { kStrong, kWeak };

std::string verdict_name(Verdict verdict);

struct BDetection {
  Verdict verdict = Verdict::kStrong;
  double lambda = 1.0;
};

/// strong <=> lambda > threshold (strict)
Verdict classify_lambda(double lambda, const BThreshold& threshold);

/// Queries the model on the image and m_b fresh spatial neighbors.
BDetection detect_b(ModelUnderTest& model, const Image& image, const BThreshold& threshold,
                    RngStream& rng, const TransformOptions& options = {});

nlohmann::ordered_json bthreshold_to_json(const BThreshold& threshold);
BThreshold bthreshold_from_json(const nlohmann::json& doc);

// ---------------------------------------------------------------------------
// White-box detector: dense classifier over penultimate features.

/// Label 1 = weak, 0 = strong. Inputs are standardized with the training
/// set's per-column mean and scale before entering the net.
struct WModel {
  DenseNet net;
  std::vector<float> feature_mean;
  std::vector<float> feature_scale;
};

/// Default detector shape D -> 256 -> 128 -> 64 -> 2.
std::vector<std::size_t> default_w_layers(std::size_t feature_dim);

TrainConfig default_w_train_config(std::uint64_t seed);

/// Throws kInsufficientData when only one class is present.
WModel train_w(const FeatureMatrix& features, const std::vector<bool>& weak_labels,
               const TrainConfig& config, std::vector<std::size_t> layers = {});

struct WDetection {
  Verdict verdict = Verdict::kStrong;
  double weak_probability = 0.0;
};

/// weak <=> P(weak) >= 0.5
WDetection detect_w(const WModel& model, std::span<const float> feature);

void save_wmodel(const WModel& model, const std::filesystem::path& path);
WModel load_wmodel(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Baselines and evaluation.

/// Uniform sample without replacement, returned sorted.
std::vector<std::size_t> baseline_random(std::size_t n_detected, std::size_t n_total, RngStream& rng);

/// weak <=> confidence < conf_cutoff
std::vector<std::size_t> baseline_top1(std::span<const double> confidences, double conf_cutoff);

/// Grid {0.05, 0.10, ..., 0.95}. Returns the cutoff with the best F1 on the
/// given calibration data; ties keep the smallest cutoff.
double select_top1_cutoff(std::span<const double> confidences,
                          const std::vector<bool>& weak_truth);

struct EvalMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double detected = 0.0;      // |E|
  double truth = 0.0;         // |A|
  double intersection = 0.0;  // |A ∩ E|
};

/// Index sets need not be sorted; duplicates are ignored.
EvalMetrics evaluate(std::span<const std::size_t> detected, std::span<const std::size_t> truth,
                     std::size_t n_total);

struct DataSplit {
  std::vector<std::size_t> calibration;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;
  double calibration_fraction = 0.5;
};

/// Random partition of [0, n), both parts sorted.
DataSplit split_points(std::size_t n, std::uint64_t seed, double calibration_fraction = 0.5);

struct EvalOptions {
  double cutoff = 0.75;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::size_t random_trials = 100;
  TransformOptions transform;
};

struct EvalEntry {
  std::string name;
  EvalMetrics metrics;
  nlohmann::ordered_json extra = nlohmann::ordered_json::object();
};

struct EvalReport {
  double cutoff = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t split_seed = 0;
  std::size_t n_total = 0;
  std::size_t n_truth = 0;
  std::vector<EvalEntry> entries;

  const EvalEntry* find(const std::string& name) const;
};

struct EvalInputs {
  const RobustnessProfile* profile = nullptr;   // ground truth
  const Dataset* dataset = nullptr;
  ModelUnderTest* model = nullptr;              // queried by detect_b
  const BThreshold* bthreshold = nullptr;
  const WModel* wmodel = nullptr;
  std::optional<FeatureMatrix> features;        // needed with wmodel
  DataSplit split;
};

/// Runs the detectors that are present plus the random and top-1 baselines
/// on the test split; the top-1 cutoff is tuned on the calibration split.
/// Random baselines are matched to each detector's |E| and averaged over
/// options.random_trials draws.
EvalReport run_evaluation(const EvalInputs& inputs, const EvalOptions& options);

nlohmann::ordered_json eval_to_json(const EvalReport& report);

}  // namespace robometer
