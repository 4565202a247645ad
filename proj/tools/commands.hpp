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
#include <string>

#include <nlohmann/json.hpp>

namespace robometer::cli {

inline constexpr const char* kToolName = "robometer";
inline constexpr const char* kToolVersion = "0.1.0";

// Options shared by most subcommands. threads and out affect where and how
// fast results are produced, never their content, so they stay out of the
// provenance block.
struct RunConfig {
  std::uint64_t seed = 0;
  std::size_t neighbors = 50;
  std::size_t neighbors_b = 50;
  double cutoff = 0.75;
  double epsilon = 0.1;
  std::string recipe = "spatial";
  std::string model;
  std::size_t threads = 1;
  std::filesystem::path out = ".";
  std::uint64_t split_seed = 0;
  double calibration_fraction = 0.5;
  std::int64_t timeout_ms = 60'000;
};

struct GenDataOptions {
  std::size_t n_points = 200;
  std::size_t side = 16;
  std::size_t classes = 4;
  double ambiguity = 0.3;
  std::size_t channels = 1;
};

struct TrainModelOptions {
  std::filesystem::path data;
  std::string hidden = "128,64";
  std::size_t epochs = 100;
  std::size_t batch = 32;
  double learning_rate = 1e-3;
  std::size_t augment = 2;
  std::string name = "builtin-mlp";
};

struct ProfileCommandOptions {
  std::filesystem::path data;
};

struct AnalyzeOptions {
  std::filesystem::path profile;
  std::optional<std::filesystem::path> test_profile;
  std::optional<std::filesystem::path> compare_profile;
  std::string metric = "euclidean";
};

struct CalibrateOptions {
  std::filesystem::path profile;
};

struct DetectBOptions {
  std::filesystem::path data;
  std::filesystem::path threshold;
};

struct TrainWOptions {
  std::filesystem::path profile;
  std::size_t epochs = 200;
};

struct DetectWOptions {
  std::filesystem::path data;
  std::filesystem::path wmodel;
};

struct EvalCommandOptions {
  std::filesystem::path profile;
  std::filesystem::path data;
  std::optional<std::filesystem::path> bthreshold;
  std::optional<std::filesystem::path> wmodel;
  std::size_t random_trials = 100;
};

void run_gen_data(const RunConfig& config, const GenDataOptions& options);
void run_train_model(const RunConfig& config, const TrainModelOptions& options);
void run_profile(const RunConfig& config, const ProfileCommandOptions& options);
void run_analyze(const RunConfig& config, const AnalyzeOptions& options);
void run_calibrate_b(const RunConfig& config, const CalibrateOptions& options);
void run_detect_b(const RunConfig& config, const DetectBOptions& options);
void run_train_w(const RunConfig& config, const TrainWOptions& options);
void run_detect_w(const RunConfig& config, const DetectWOptions& options);
void run_eval(const RunConfig& config, const EvalCommandOptions& options);

}  // namespace robometer::cli
