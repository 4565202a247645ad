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

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>

#include "commands.hpp"
#include "robometer/error.hpp"

namespace {

using robometer::Error;
using robometer::ErrorCode;
namespace cli = robometer::cli;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
      return 2;
    case ErrorCode::kIo:
      return 3;
    case ErrorCode::kBadMagic:
    case ErrorCode::kUnknownDtype:
    case ErrorCode::kTruncated:
    case ErrorCode::kFormat:
    case ErrorCode::kDimensionMismatch:
      return 4;
    case ErrorCode::kMissingArtifact:
      return 5;
    case ErrorCode::kProtocol:
    case ErrorCode::kTimeout:
    case ErrorCode::kAdapter:
      return 6;
    case ErrorCode::kNumerical:
      return 7;
    case ErrorCode::kInsufficientData:
      return 8;
  }
  return 1;
}

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("robometer");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("ROBOMETER_LOG")) {
    spdlog::set_level(spdlog::level::from_str(level));
  }
}

double parse_cutoff(const std::string& text) {
  try {
    std::size_t used = 0;
    const double value = std::stod(text, &used);
    if (used == text.size() && value > 0.0 && value <= 1.0) return value;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::kInvalidArgument, "--cutoff must be a number in (0, 1], got '" + text + "'");
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();

  CLI::App app{"Measure per-input robustness of image models and detect weak inputs"};
  app.set_version_flag("--version", std::string(cli::kToolVersion));
  app.require_subcommand(1);

  cli::RunConfig config;
  std::string cutoff_text = "0.75";
  std::string out_dir = ".";
  app.add_option("--seed", config.seed, "Master seed for all randomness");
  app.add_option("--neighbors", config.neighbors, "Neighbors per point when profiling (m)")
      ->check(CLI::PositiveNumber);
  app.add_option("--neighbors-b", config.neighbors_b, "Neighbors per point for the black-box detector")
      ->check(CLI::PositiveNumber);
  app.add_option("--cutoff", cutoff_text, "Neighbor-accuracy cutoff for weak points (0.5, 0.75 or custom)");
  app.add_option("--epsilon", config.epsilon, "Regression tolerance")->check(CLI::PositiveNumber);
  app.add_option("--recipe", config.recipe, "Neighbor recipe")
      ->check(CLI::IsMember({"spatial", "rain-fog"}));
  app.add_option("--model", config.model, "Model file or exec:<command line>");
  app.add_option("--threads", config.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", out_dir, "Output directory or file");
  app.add_option("--split-seed", config.split_seed, "Seed of the calibration/test split");
  app.add_option("--calibration-fraction", config.calibration_fraction,
                 "Share of points used for calibration")
      ->check(CLI::Range(0.0, 1.0));
  app.add_option("--timeout-ms", config.timeout_ms, "Per-request timeout for exec: models")
      ->check(CLI::PositiveNumber);

  cli::GenDataOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate the synthetic shapes dataset");
  gen_cmd->add_option("--n", gen.n_points, "Number of points")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--side", gen.side, "Image side in pixels");
  gen_cmd->add_option("--classes", gen.classes, "Number of classes (2-8)");
  gen_cmd->add_option("--ambiguity", gen.ambiguity, "Fraction of blended points")
      ->check(CLI::Range(0.0, 1.0));
  gen_cmd->add_option("--channels", gen.channels, "1 or 3");

  cli::TrainModelOptions train;
  auto* train_cmd = app.add_subcommand("train-model", "Train a built-in dense model on a dataset");
  train_cmd->add_option("--data", train.data, "Dataset manifest")->required();
  train_cmd->add_option("--hidden", train.hidden, "Hidden layer sizes, comma separated");
  train_cmd->add_option("--epochs", train.epochs, "Maximum epochs");
  train_cmd->add_option("--batch", train.batch, "Batch size")->check(CLI::PositiveNumber);
  train_cmd->add_option("--lr", train.learning_rate, "Adam learning rate");
  train_cmd->add_option("--augment", train.augment, "Spatially transformed copies per image");
  train_cmd->add_option("--name", train.name, "Model name reported by the handshake");

  cli::ProfileCommandOptions profile;
  auto* profile_cmd = app.add_subcommand("profile", "Compute per-point robustness profiles");
  profile_cmd->add_option("--data", profile.data, "Dataset manifest")->required();

  cli::AnalyzeOptions analyze;
  std::string test_profile, compare_profile;
  auto* analyze_cmd = app.add_subcommand("analyze", "Feature-space statistics of weak and strong points");
  analyze_cmd->add_option("--profile", analyze.profile, "Profile directory")->required();
  analyze_cmd->add_option("--test-profile", test_profile, "Second profile for the histogram comparison");
  analyze_cmd->add_option("--compare-profile", compare_profile, "Profile of another model on the same data");
  analyze_cmd->add_option("--metric", analyze.metric, "Feature distance")
      ->check(CLI::IsMember({"euclidean", "cosine"}));

  cli::CalibrateOptions calibrate;
  auto* calibrate_cmd = app.add_subcommand("calibrate-b", "Fit the black-box Simpson threshold");
  calibrate_cmd->add_option("--profile", calibrate.profile, "Profile directory")->required();

  cli::DetectBOptions detect_b;
  auto* detect_b_cmd = app.add_subcommand("detect-b", "Classify points with the black-box detector");
  detect_b_cmd->add_option("--data", detect_b.data, "Dataset manifest")->required();
  detect_b_cmd->add_option("--bthreshold", detect_b.threshold, "bthreshold.json")->required();

  cli::TrainWOptions train_w;
  auto* train_w_cmd = app.add_subcommand("train-w", "Train the white-box feature detector");
  train_w_cmd->add_option("--profile", train_w.profile, "Profile directory")->required();
  train_w_cmd->add_option("--epochs", train_w.epochs, "Maximum epochs");

  cli::DetectWOptions detect_w;
  auto* detect_w_cmd = app.add_subcommand("detect-w", "Classify points with the white-box detector");
  detect_w_cmd->add_option("--data", detect_w.data, "Dataset manifest")->required();
  detect_w_cmd->add_option("--wmodel", detect_w.wmodel, "wmodel.rbnn")->required();

  cli::EvalCommandOptions eval;
  std::string eval_b, eval_w;
  auto* eval_cmd = app.add_subcommand("eval", "Score detectors and baselines on the test split");
  eval_cmd->add_option("--profile", eval.profile, "Profile directory")->required();
  eval_cmd->add_option("--data", eval.data, "Dataset manifest");
  eval_cmd->add_option("--bthreshold", eval_b, "bthreshold.json");
  eval_cmd->add_option("--wmodel", eval_w, "wmodel.rbnn");
  eval_cmd->add_option("--random-trials", eval.random_trials, "Random baseline draws")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: E_USAGE: " << e.what() << "\n";
    return 2;
  }

  try {
    config.cutoff = parse_cutoff(cutoff_text);
    config.out = out_dir;
    if (!test_profile.empty()) analyze.test_profile = test_profile;
    if (!compare_profile.empty()) analyze.compare_profile = compare_profile;
    if (!eval_b.empty()) eval.bthreshold = eval_b;
    if (!eval_w.empty()) eval.wmodel = eval_w;

    if (*gen_cmd) cli::run_gen_data(config, gen);
    else if (*train_cmd) cli::run_train_model(config, train);
    else if (*profile_cmd) cli::run_profile(config, profile);
    else if (*analyze_cmd) cli::run_analyze(config, analyze);
    else if (*calibrate_cmd) cli::run_calibrate_b(config, calibrate);
    else if (*detect_b_cmd) cli::run_detect_b(config, detect_b);
    else if (*train_w_cmd) cli::run_train_w(config, train_w);
    else if (*detect_w_cmd) cli::run_detect_w(config, detect_w);
    else if (*eval_cmd) cli::run_eval(config, eval);
  } catch (const Error& e) {
    std::cerr << "error: " << robometer::error_code_name(e.code()) << ": " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: E_IO: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: E_INTERNAL: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
