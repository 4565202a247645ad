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

#include "commands.hpp"

#include <spdlog/spdlog.h>

#include <fstream>
#include <sstream>

#include "robometer/dataset.hpp"
#include "robometer/detectors.hpp"
#include "robometer/error.hpp"
#include "robometer/featstats.hpp"
#include "robometer/model_iface.hpp"
#include "robometer/nn.hpp"
#include "robometer/robustness.hpp"
#include "robometer/synthetic.hpp"
#include "robometer/tensorpack.hpp"
#include "robometer/transforms.hpp"

namespace robometer::cli {
namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

constexpr const char* kProfileHeader = "profile.json";
constexpr const char* kProfileRecords = "profile.jsonl";
constexpr const char* kProfileFeatures = "features.tpak";

ojson provenance(const std::string& command, ojson config, const RunConfig& run) {
  ojson doc;
  doc["tool"] = kToolName;
  doc["version"] = kToolVersion;
  doc["command"] = command;
  doc["config"] = std::move(config);
  doc["seeds"] = {{"seed", run.seed}};
  return doc;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

void write_json(const fs::path& path, const ojson& doc) { write_text(path, doc.dump(2) + "\n"); }

nlohmann::json read_json(const fs::path& path, ErrorCode missing = ErrorCode::kIo) {
  if (!fs::exists(path)) throw Error(missing, "file not found: " + path.string());
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, path.string() + ": " + e.what());
  }
}

std::unique_ptr<ModelUnderTest> open_configured_model(const RunConfig& config) {
  if (config.model.empty()) throw Error(ErrorCode::kInvalidArgument, "--model is required");
  ModelOpenOptions options;
  options.subprocess.timeout = std::chrono::milliseconds(config.timeout_ms);
  auto model = open_model(config.model, options);
  const ModelInfo& info = handshake(*model);
  spdlog::info("model '{}' ({}, {} classes, features: {})", info.name, task_name(info.task),
               info.num_classes, info.feature_dim ? std::to_string(*info.feature_dim) : "none");
  return model;
}

struct LoadedProfile {
  RobustnessProfile profile;
  std::optional<FeatureMatrix> features;
  nlohmann::json header;
};

LoadedProfile load_profile_dir(const fs::path& dir) {
  LoadedProfile loaded;
  loaded.header = read_json(dir / kProfileHeader, ErrorCode::kMissingArtifact);
  std::ifstream records(dir / kProfileRecords);
  if (!records) throw Error(ErrorCode::kMissingArtifact, "missing " + (dir / kProfileRecords).string());
  loaded.profile = read_profile(loaded.header.at("profile"), records);
  const fs::path features = dir / kProfileFeatures;
  if (fs::exists(features)) {
    const TensorPack pack = read_tensorpack(features);
    if (pack.rank() != 2 || pack.dims()[0] != loaded.profile.points.size()) {
      throw Error(ErrorCode::kFormat, "features.tpak does not match the profile");
    }
    FeatureMatrix m(pack.dims()[0], pack.dims()[1]);
    const auto values = pack.f32_values();
    m.values.assign(values.begin(), values.end());
    for (std::size_t i = 0; i < m.rows; ++i) {
      loaded.profile.points[i].features = std::vector<float>(m.row(i).begin(), m.row(i).end());
    }
    loaded.features = std::move(m);
  }
  return loaded;
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
  std::vector<std::size_t> sizes;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      sizes.push_back(static_cast<std::size_t>(std::stoull(item)));
    } catch (const std::exception&) {
      throw Error(ErrorCode::kInvalidArgument, "bad layer size list: " + text);
    }
  }
  return sizes;
}

std::string dataset_id(const fs::path& manifest) { return manifest.parent_path().filename().string(); }

ojson split_json(const DataSplit& split) {
  return {{"seed", split.seed}, {"calibration_fraction", split.calibration_fraction},
          {"calibration_points", split.calibration.size()}, {"test_points", split.test.size()}};
}

void check_split(const nlohmann::json& recorded, const DataSplit& split, const std::string& what) {
  if (recorded.is_null()) return;
  if (recorded.value("seed", split.seed) != split.seed ||
      recorded.value("calibration_fraction", split.calibration_fraction) !=
          split.calibration_fraction) {
    throw Error(ErrorCode::kInvalidArgument,
                what + " was fitted on a different split; pass the same --split-seed");
  }
}

}  // namespace

void run_gen_data(const RunConfig& config, const GenDataOptions& options) {
  SyntheticConfig synth;
  synth.n_points = options.n_points;
  synth.image_side = options.side;
  synth.n_classes = options.classes;
  synth.ambiguity_fraction = options.ambiguity;
  synth.seed = config.seed;
  synth.channels = options.channels;
  Dataset dataset = generate_synthetic_dataset(synth);
  dataset.metadata["provenance"] =
      provenance("gen-data",
                 {{"n", options.n_points}, {"side", options.side}, {"classes", options.classes},
                  {"ambiguity", options.ambiguity}, {"channels", options.channels}},
                 config);
  const fs::path manifest = save_dataset(dataset, config.out);
  spdlog::info("wrote {} points ({} blended) to {}", dataset.size(),
               dataset.metadata["blended_count"].get<std::size_t>(), manifest.string());
}

void run_train_model(const RunConfig& config, const TrainModelOptions& options) {
  const Dataset dataset = load_dataset(options.data);
  std::vector<std::size_t> layers = {dataset.image_dims.size()};
  for (std::size_t h : parse_sizes(options.hidden)) layers.push_back(h);
  const bool classify = dataset.task == Task::kClassification;
  layers.push_back(classify ? dataset.num_classes : 1);

  // Optional spatial augmentation: every image contributes `augment`
  // transformed copies with the same target.
  std::vector<Image> images = dataset.images;
  std::vector<std::uint32_t> labels = dataset.labels;
  std::vector<float> targets = dataset.regression_targets;
  if (options.augment > 0) {
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      RngStream rng = RngStream::for_point(config.seed ^ 0xA06'0000ULL, i);
      for (auto& n : generate_neighbors(dataset.images[i], options.augment, rng,
                                        NeighborRecipe::kSpatial)) {
        images.push_back(std::move(n.image));
        if (classify) {
          labels.push_back(dataset.labels[i]);
        } else {
          targets.push_back(dataset.regression_targets[i]);
        }
      }
    }
  }

  TrainingSet data;
  data.features = flatten_images(images);
  if (classify) {
    data.labels = std::move(labels);
  } else {
    data.targets = Eigen::Map<const Eigen::VectorXf>(targets.data(),
                                                     static_cast<Eigen::Index>(targets.size()));
  }
  TrainConfig train_config;
  train_config.seed = config.seed;
  train_config.max_epochs = options.epochs;
  train_config.batch_size = options.batch;
  train_config.learning_rate = options.learning_rate;
  train_config.early_stop_patience = 10;
  train_config.validation_fraction = 0.1;

  TrainReport report;
  const DenseNet net =
      train(init_dense_net<float>(layers, classify ? OutputHead::kSoftmax : OutputHead::kLinear,
                                  config.seed),
            data, train_config, &report);

  fs::path model_path = config.out;
  if (fs::is_directory(model_path) || !model_path.has_extension()) {
    fs::create_directories(model_path);
    model_path /= "model.rbnn";
  } else if (model_path.has_parent_path()) {
    fs::create_directories(model_path.parent_path());
  }
  save_builtin_model(net, dataset.image_dims, options.name, model_path, dataset.task);

  ojson summary;
  summary["provenance"] = provenance(
      "train-model",
      {{"data", options.data.generic_string()}, {"layers", layers}, {"epochs", options.epochs},
       {"batch", options.batch}, {"learning_rate", options.learning_rate},
       {"augment", options.augment}},
      config);
  summary["epochs_run"] = report.epochs_run;
  summary["best_epoch"] = report.best_epoch;
  summary["best_validation_score"] = report.best_score;
  summary["epoch_losses"] = report.epoch_losses;
  write_json(model_path.parent_path() / (model_path.stem().string() + ".train.json"), summary);
  spdlog::info("trained {} epochs (best {}), saved {}", report.epochs_run, report.best_epoch,
               model_path.string());
}

void run_profile(const RunConfig& config, const ProfileCommandOptions& options) {
  const Dataset dataset = load_dataset(options.data);
  auto model = open_configured_model(config);

  ProfileOptions profile_options;
  profile_options.m = config.neighbors;
  profile_options.seed = config.seed;
  profile_options.recipe = parse_recipe(config.recipe);
  profile_options.epsilon = config.epsilon;
  profile_options.threads = config.threads;
  profile_options.dataset_id = dataset_id(options.data);
  const RobustnessProfile profile = profile_dataset(*model, dataset, profile_options);

  const fs::path out = config.out;
  fs::create_directories(out);
  ojson header;
  header["provenance"] = provenance(
      "profile",
      {{"data", options.data.generic_string()}, {"model", config.model},
       {"neighbors", config.neighbors}, {"recipe", config.recipe}, {"epsilon", config.epsilon}},
      config);
  header["profile"] = profile_header(profile);
  write_json(out / kProfileHeader, header);

  std::ostringstream jsonl, csv;
  write_profile_jsonl(profile, jsonl);
  write_profile_csv(profile, csv);
  write_text(out / kProfileRecords, jsonl.str());
  write_text(out / "profile.csv", csv.str());

  const auto hist = histogram20(profile.accuracies());
  std::ostringstream hcsv;
  hcsv << "bin_low,bin_high,count\n";
  for (std::size_t b = 0; b < hist.size(); ++b) {
    hcsv << nlohmann::json(static_cast<double>(b) / 20.0).dump() << ','
         << nlohmann::json(static_cast<double>(b + 1) / 20.0).dump() << ',' << hist[b] << '\n';
  }
  write_text(out / "histogram.csv", hcsv.str());

  if (auto features = profile.features()) {
    write_tensorpack(TensorPack::f32({features->rows, features->cols}, features->values),
                     out / kProfileFeatures);
  }
  const auto weak = label_points(profile, config.cutoff);
  spdlog::info("profiled {} points; {} weak at cutoff {}", profile.points.size(), weak.weak_count(),
               config.cutoff);
}

void run_analyze(const RunConfig& config, const AnalyzeOptions& options) {
  const LoadedProfile loaded = load_profile_dir(options.profile);
  if (!loaded.features) {
    throw Error(ErrorCode::kMissingArtifact, "profile has no features.tpak (black-box model?)");
  }
  std::optional<LoadedProfile> test, compare;
  if (options.test_profile) test = load_profile_dir(*options.test_profile);
  if (options.compare_profile) compare = load_profile_dir(*options.compare_profile);

  AnalysisOptions analysis_options;
  analysis_options.cutoff = config.cutoff;
  if (options.metric == "cosine") {
    analysis_options.metric = DistanceMetric::kCosine;
  } else if (options.metric != "euclidean") {
    throw Error(ErrorCode::kInvalidArgument, "unknown metric: " + options.metric);
  }
  const AnalysisReport report =
      analyze(loaded.profile, *loaded.features, analysis_options, test ? &test->profile : nullptr,
              compare ? &compare->profile : nullptr);

  ojson doc;
  doc["provenance"] = provenance(
      "analyze",
      {{"profile", options.profile.generic_string()}, {"cutoff", config.cutoff},
       {"metric", options.metric},
       {"test_profile", options.test_profile ? options.test_profile->generic_string() : ""},
       {"compare_profile", options.compare_profile ? options.compare_profile->generic_string() : ""}},
      config);
  const ojson body = analysis_to_json(report);
  for (const auto& [k, v] : body.items()) doc[k] = v;
  write_json(config.out / "analysis.json", doc);

  std::ostringstream csv;
  csv << "index,feature_digest,neighbor_accuracy,ratio\n";
  for (std::size_t i = 0; i < loaded.profile.points.size(); ++i) {
    const double r = report.per_point_r[i];
    csv << i << ',' << feature_digest(loaded.features->row(i)) << ','
        << nlohmann::json(loaded.profile.points[i].neighbor_accuracy).dump() << ','
        << (std::isfinite(r) ? nlohmann::json(r).dump() : "inf") << '\n';
  }
  write_text(config.out / "ratios.csv", csv.str());
  for (const auto& w : report.warnings) spdlog::warn("{}", w);
  spdlog::info("r_w={:.4f} r_s={:.4f}", report.r_w, report.r_s);
}

void run_calibrate_b(const RunConfig& config, const CalibrateOptions& options) {
  const LoadedProfile loaded = load_profile_dir(options.profile);
  const DataSplit split =
      split_points(loaded.profile.points.size(), config.split_seed, config.calibration_fraction);
  const BThreshold threshold =
      calibrate_b(loaded.profile, config.cutoff, config.neighbors_b, split.calibration);
  if (threshold.no_weak_points) {
    spdlog::warn("no weak points in the calibration split; every point will be called strong");
  }
  ojson doc = bthreshold_to_json(threshold);
  doc["split"] = split_json(split);
  doc["provenance"] = provenance(
      "calibrate-b",
      {{"profile", options.profile.generic_string()}, {"cutoff", config.cutoff},
       {"neighbors_b", config.neighbors_b}, {"split_seed", config.split_seed},
       {"calibration_fraction", config.calibration_fraction}},
      config);
  fs::path path = config.out;
  if (!path.has_extension()) path /= "bthreshold.json";
  write_json(path, doc);
  spdlog::info("lambda threshold {:.6f} from {} calibration points", threshold.lambda_threshold,
               threshold.calibration_points);
}

void run_detect_b(const RunConfig& config, const DetectBOptions& options) {
  const BThreshold threshold =
      bthreshold_from_json(read_json(options.threshold, ErrorCode::kMissingArtifact));
  const Dataset dataset = load_dataset(options.data);
  auto model = open_configured_model(config);

  std::ostringstream out;
  std::size_t weak = 0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    RngStream rng = RngStream::for_point(config.seed, i);
    const BDetection d = detect_b(*model, dataset.images[i], threshold, rng);
    weak += d.verdict == Verdict::kWeak ? 1 : 0;
    ojson line;
    line["index"] = i;
    line["verdict"] = verdict_name(d.verdict);
    line["lambda"] = d.lambda;
    out << line.dump() << '\n';
  }
  fs::create_directories(config.out);
  write_text(config.out / "detect_b.jsonl", out.str());
  write_json(config.out / "detect_b.json",
             {{"provenance", provenance("detect-b",
                                        {{"data", options.data.generic_string()},
                                         {"model", config.model},
                                         {"threshold", options.threshold.generic_string()}},
                                        config)},
              {"points", dataset.size()},
              {"weak", weak}});
  spdlog::info("{} of {} points flagged weak", weak, dataset.size());
}

void run_train_w(const RunConfig& config, const TrainWOptions& options) {
  const LoadedProfile loaded = load_profile_dir(options.profile);
  if (!loaded.features) {
    throw Error(ErrorCode::kMissingArtifact, "profile has no features.tpak; white-box training needs them");
  }
  const DataSplit split =
      split_points(loaded.profile.points.size(), config.split_seed, config.calibration_fraction);
  const WeakLabeling labeling = label_points(loaded.profile, config.cutoff);
  FeatureMatrix features(split.calibration.size(), loaded.features->cols);
  std::vector<bool> weak;
  for (std::size_t k = 0; k < split.calibration.size(); ++k) {
    const auto row = loaded.features->row(split.calibration[k]);
    std::copy(row.begin(), row.end(), features.row(k).begin());
    weak.push_back(labeling.weak_flags[split.calibration[k]]);
  }
  TrainConfig train_config = default_w_train_config(config.seed);
  train_config.max_epochs = options.epochs;
  const WModel model = train_w(features, weak, train_config);

  fs::path path = config.out;
  if (!path.has_extension()) {
    fs::create_directories(path);
    path /= "wmodel.rbnn";
  }
  save_wmodel(model, path);
  write_json(path.parent_path() / (path.stem().string() + ".json"),
             {{"provenance", provenance("train-w",
                                        {{"profile", options.profile.generic_string()},
                                         {"cutoff", config.cutoff}, {"epochs", options.epochs},
                                         {"split_seed", config.split_seed},
                                         {"calibration_fraction", config.calibration_fraction}},
                                        config)},
              {"split", split_json(split)},
              {"layers", model.net.layer_sizes}});
  spdlog::info("trained white-box detector on {} points, saved {}", features.rows, path.string());
}

void run_detect_w(const RunConfig& config, const DetectWOptions& options) {
  const WModel wmodel = load_wmodel(options.wmodel);
  const Dataset dataset = load_dataset(options.data);
  auto model = open_configured_model(config);
  if (!model->info().feature_dim) {
    throw Error(ErrorCode::kInvalidArgument, "model exposes no features; white-box detection needs them");
  }
  std::ostringstream out;
  std::size_t weak = 0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto p = model->predict_batch(std::span<const Image>(&dataset.images[i], 1), true);
    const WDetection d = detect_w(wmodel, p.front().features.value());
    weak += d.verdict == Verdict::kWeak ? 1 : 0;
    ojson line;
    line["index"] = i;
    line["verdict"] = verdict_name(d.verdict);
    line["weak_probability"] = d.weak_probability;
    out << line.dump() << '\n';
  }
  fs::create_directories(config.out);
  write_text(config.out / "detect_w.jsonl", out.str());
  spdlog::info("{} of {} points flagged weak", weak, dataset.size());
}

void run_eval(const RunConfig& config, const EvalCommandOptions& options) {
  if (!options.bthreshold && !options.wmodel) {
    throw Error(ErrorCode::kMissingArtifact, "eval needs --bthreshold and/or --wmodel");
  }
  std::optional<BThreshold> bthreshold;
  nlohmann::json b_doc;
  if (options.bthreshold) {
    b_doc = read_json(*options.bthreshold, ErrorCode::kMissingArtifact);
    bthreshold = bthreshold_from_json(b_doc);
  }
  std::optional<WModel> wmodel;
  nlohmann::json w_doc;
  if (options.wmodel) {
    wmodel = load_wmodel(*options.wmodel);
    const fs::path sidecar = options.wmodel->parent_path() / (options.wmodel->stem().string() + ".json");
    if (fs::exists(sidecar)) w_doc = read_json(sidecar);
  }

  const LoadedProfile loaded = load_profile_dir(options.profile);
  const DataSplit split =
      split_points(loaded.profile.points.size(), config.split_seed, config.calibration_fraction);
  if (b_doc.contains("split")) check_split(b_doc["split"], split, "black-box threshold");
  if (w_doc.contains("split")) check_split(w_doc["split"], split, "white-box detector");

  std::optional<Dataset> dataset;
  std::unique_ptr<ModelUnderTest> model;
  if (bthreshold) {
    dataset = load_dataset(options.data);
    model = open_configured_model(config);
  }

  EvalInputs inputs;
  inputs.profile = &loaded.profile;
  inputs.dataset = dataset ? &*dataset : nullptr;
  inputs.model = model.get();
  inputs.bthreshold = bthreshold ? &*bthreshold : nullptr;
  inputs.wmodel = wmodel ? &*wmodel : nullptr;
  inputs.features = loaded.features;
  inputs.split = split;

  EvalOptions eval_options;
  eval_options.cutoff = config.cutoff;
  eval_options.seed = config.seed;
  eval_options.threads = config.threads;
  eval_options.random_trials = options.random_trials;
  const EvalReport report = run_evaluation(inputs, eval_options);

  ojson doc;
  doc["provenance"] = provenance(
      "eval",
      {{"profile", options.profile.generic_string()}, {"data", options.data.generic_string()},
       {"model", config.model},
       {"bthreshold", options.bthreshold ? options.bthreshold->generic_string() : ""},
       {"wmodel", options.wmodel ? options.wmodel->generic_string() : ""},
       {"cutoff", config.cutoff}, {"split_seed", config.split_seed},
       {"calibration_fraction", config.calibration_fraction},
       {"random_trials", options.random_trials}},
      config);
  doc["split"] = split_json(split);
  const ojson body = eval_to_json(report);
  for (const auto& [k, v] : body.items()) doc[k] = v;
  fs::path path = config.out;
  if (!path.has_extension()) path /= "eval.json";
  write_json(path, doc);
  for (const auto& e : report.entries) {
    spdlog::info("{:<13} P={:.3f} R={:.3f} F1={:.3f}", e.name, e.metrics.precision,
                 e.metrics.recall, e.metrics.f1);
  }
}

}  // namespace robometer::cli
