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

#include "robometer/detectors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include "robometer/error.hpp"
#include "robometer/featstats.hpp"

namespace robometer {
namespace {

constexpr std::uint64_t kDetectSalt = 0xB1AC'CB0C'5EED'0001ULL;
constexpr std::uint64_t kRandomSalt = 0x5A4D'0B5E'11E5'0002ULL;
constexpr std::uint64_t kSplitSalt = 0x5B11'7000'0000'0003ULL;
constexpr std::uint64_t kTrainSalt = 0x7EA1'0000'0000'0004ULL;

}  // namespace

std::string verdict_name(Verdict v) { return v == Verdict::kWeak ? "weak" : "strong"; }

BThreshold calibrate_b(const RobustnessProfile& profile, double cutoff, std::size_t m_b,
                       std::span<const std::size_t> indices) {
  if (profile.task != Task::kClassification) {
    throw Error(ErrorCode::kInvalidArgument, "black-box calibration needs a classification profile");
  }
  if (m_b == 0) throw Error(ErrorCode::kInvalidArgument, "m_b must be >= 1");
  const WeakLabeling labeling = label_points(profile, cutoff);
  std::vector<std::size_t> all;
  if (indices.empty()) {
    all.resize(profile.points.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    indices = all;
  }

  BThreshold threshold;
  threshold.cutoff_used = cutoff;
  threshold.m_b = m_b;
  threshold.calibration_points = indices.size();
  bool any_weak = false;
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (std::size_t i : indices) {
    if (i >= profile.points.size()) throw Error(ErrorCode::kInvalidArgument, "index out of range");
    const auto& p = profile.points[i];
    if (!p.diversity_lambda) throw Error(ErrorCode::kInvalidArgument, "profile lacks lambda values");
    hash = (hash ^ i) * 0x100000001b3ULL;
    if (!labeling.weak_flags[i]) continue;
    threshold.lambda_threshold =
        any_weak ? std::max(threshold.lambda_threshold, *p.diversity_lambda) : *p.diversity_lambda;
    any_weak = true;
  }
  if (!any_weak) {
    threshold.lambda_threshold = 0.0;
    threshold.no_weak_points = true;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  threshold.calibration_digest = buf;
  return threshold;
}

Verdict classify_lambda(double lambda, const BThreshold& threshold) {
  return lambda > threshold.lambda_threshold ? Verdict::kStrong : Verdict::kWeak;
}

BDetection detect_b(ModelUnderTest& model, const Image& image, const BThreshold& threshold,
                    RngStream& rng, const TransformOptions& options) {
  const ModelInfo& info = model.info();
  if (info.task != Task::kClassification) {
    throw Error(ErrorCode::kInvalidArgument, "black-box detection needs a classifier");
  }
  std::vector<Image> batch;
  batch.reserve(threshold.m_b + 1);
  batch.push_back(image);
  for (auto& n : generate_neighbors(image, threshold.m_b, rng, NeighborRecipe::kSpatial, options)) {
    batch.push_back(std::move(n.image));
  }
  const auto predictions = model.predict_batch(batch, false);
  std::vector<std::uint32_t> classes;
  classes.reserve(predictions.size());
  for (const auto& p : predictions) classes.push_back(static_cast<std::uint32_t>(p.top1()));
  BDetection detection;
  detection.lambda = simpson_lambda(classes, info.num_classes);
  detection.verdict = classify_lambda(detection.lambda, threshold);
  return detection;
}

nlohmann::ordered_json bthreshold_to_json(const BThreshold& t) {
  nlohmann::ordered_json doc;
  doc["kind"] = "bthreshold";
  doc["cutoff_used"] = t.cutoff_used;
  doc["lambda_threshold"] = t.lambda_threshold;
  doc["m_b"] = t.m_b;
  doc["no_weak_points"] = t.no_weak_points;
  doc["calibration_points"] = t.calibration_points;
  doc["calibration_digest"] = t.calibration_digest;
  return doc;
}

BThreshold bthreshold_from_json(const nlohmann::json& doc) {
  BThreshold t;
  try {
    if (doc.value("kind", std::string()) != "bthreshold") {
      throw Error(ErrorCode::kFormat, "document is not a black-box threshold");
    }
    t.cutoff_used = doc.at("cutoff_used").get<double>();
    t.lambda_threshold = doc.at("lambda_threshold").get<double>();
    t.m_b = doc.at("m_b").get<std::size_t>();
    t.no_weak_points = doc.value("no_weak_points", false);
    t.calibration_points = doc.value("calibration_points", std::size_t{0});
    t.calibration_digest = doc.value("calibration_digest", std::string());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("threshold: ") + e.what());
  }
  if (!(t.lambda_threshold >= 0.0 && t.lambda_threshold <= 1.0)) {
    throw Error(ErrorCode::kFormat, "lambda_threshold outside [0, 1]");
  }
  return t;
}

std::vector<std::size_t> default_w_layers(std::size_t feature_dim) {
  return {feature_dim, 256, 128, 64, 2};
}

TrainConfig default_w_train_config(std::uint64_t seed) {
  TrainConfig config;
  config.learning_rate = 1e-3;
  config.batch_size = 128;
  config.max_epochs = 200;
  config.early_stop_patience = 5;
  config.seed = seed;
  config.balance_classes = true;
  // Calibration splits hold only a handful of weak points; F1 on a held-out
  // slice of them is too noisy to steer early stopping.
  config.validation_fraction = 0.0;
  return config;
}

WModel train_w(const FeatureMatrix& features, const std::vector<bool>& weak_labels,
               const TrainConfig& config, std::vector<std::size_t> layers) {
  if (weak_labels.size() != features.rows) {
    throw Error(ErrorCode::kDimensionMismatch, "label count differs from feature rows");
  }
  const auto n_weak = static_cast<std::size_t>(std::count(weak_labels.begin(), weak_labels.end(), true));
  if (n_weak == 0 || n_weak == weak_labels.size()) {
    throw Error(ErrorCode::kInsufficientData, "white-box training needs both weak and strong points");
  }
  if (layers.empty()) layers = default_w_layers(features.cols);
  if (layers.front() != features.cols || layers.back() != 2) {
    throw Error(ErrorCode::kInvalidArgument, "detector layers must map feature_dim to 2");
  }

  WModel model;
  model.feature_mean.assign(features.cols, 0.0f);
  model.feature_scale.assign(features.cols, 1.0f);
  for (std::size_t d = 0; d < features.cols; ++d) {
    double sum = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < features.rows; ++i) sum += features.row(i)[d];
    const double mu = sum / static_cast<double>(features.rows);
    for (std::size_t i = 0; i < features.rows; ++i) {
      const double c = features.row(i)[d] - mu;
      sq += c * c;
    }
    const double sd = std::sqrt(sq / static_cast<double>(features.rows));
    model.feature_mean[d] = static_cast<float>(mu);
    model.feature_scale[d] = sd > 1e-8 ? static_cast<float>(1.0 / sd) : 1.0f;
  }

  TrainingSet data;
  data.features.resize(static_cast<Eigen::Index>(features.rows), static_cast<Eigen::Index>(features.cols));
  for (std::size_t i = 0; i < features.rows; ++i) {
    for (std::size_t d = 0; d < features.cols; ++d) {
      data.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) =
          (features.row(i)[d] - model.feature_mean[d]) * model.feature_scale[d];
    }
    data.labels.push_back(weak_labels[i] ? 1u : 0u);
  }
  model.net = train(init_dense_net<float>(layers, OutputHead::kSoftmax, config.seed ^ kTrainSalt),
                    data, config);
  return model;
}

WDetection detect_w(const WModel& model, std::span<const float> feature) {
  if (feature.size() != model.net.input_dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "feature width differs from detector input");
  }
  Eigen::MatrixXf x(1, static_cast<Eigen::Index>(feature.size()));
  for (std::size_t d = 0; d < feature.size(); ++d) {
    const float mean = model.feature_mean.empty() ? 0.0f : model.feature_mean[d];
    const float scale = model.feature_scale.empty() ? 1.0f : model.feature_scale[d];
    x(0, static_cast<Eigen::Index>(d)) = (feature[d] - mean) * scale;
  }
  const auto out = forward(model.net, x).outputs;
  WDetection detection;
  detection.weak_probability = out(0, 1);
  detection.verdict = detection.weak_probability >= 0.5 ? Verdict::kWeak : Verdict::kStrong;
  return detection;
}

void save_wmodel(const WModel& model, const std::filesystem::path& path) {
  nlohmann::json metadata = {
      {"kind", "wmodel"},
      {"feature_mean", model.feature_mean},
      {"feature_scale", model.feature_scale},
  };
  save_model(model.net, path, metadata);
}

WModel load_wmodel(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::kMissingArtifact, "white-box detector not found: " + path.string());
  }
  nlohmann::json metadata;
  WModel model;
  model.net = load_model(path, &metadata);
  if (metadata.value("kind", std::string()) != "wmodel") {
    throw Error(ErrorCode::kFormat, "model file is not a white-box detector: " + path.string());
  }
  if (model.net.output_dim() != 2) throw Error(ErrorCode::kFormat, "detector output must be 2");
  model.feature_mean = metadata.at("feature_mean").get<std::vector<float>>();
  model.feature_scale = metadata.at("feature_scale").get<std::vector<float>>();
  if (model.feature_mean.size() != model.net.input_dim() ||
      model.feature_scale.size() != model.net.input_dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "detector normalization width mismatch");
  }
  return model;
}

std::vector<std::size_t> baseline_random(std::size_t n_detected, std::size_t n_total,
                                         RngStream& rng) {
  if (n_detected > n_total) {
    throw Error(ErrorCode::kInvalidArgument, "cannot select more points than exist");
  }
  std::vector<std::size_t> pool(n_total);
  for (std::size_t i = 0; i < n_total; ++i) pool[i] = i;
  // Partial Fisher-Yates: the first n_detected slots are the sample.
  for (std::size_t i = 0; i < n_detected; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n_total - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(n_detected);
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::vector<std::size_t> baseline_top1(std::span<const double> confidences, double conf_cutoff) {
  std::vector<std::size_t> weak;
  for (std::size_t i = 0; i < confidences.size(); ++i) {
    if (confidences[i] < conf_cutoff) weak.push_back(i);
  }
  return weak;
}

EvalMetrics evaluate(std::span<const std::size_t> detected, std::span<const std::size_t> truth,
                     std::size_t n_total) {
  const std::set<std::size_t> e(detected.begin(), detected.end());
  const std::set<std::size_t> a(truth.begin(), truth.end());
  for (std::size_t i : e) {
    if (i >= n_total) throw Error(ErrorCode::kInvalidArgument, "detected index out of range");
  }
  for (std::size_t i : a) {
    if (i >= n_total) throw Error(ErrorCode::kInvalidArgument, "truth index out of range");
  }
  std::size_t both = 0;
  for (std::size_t i : e) both += a.contains(i) ? 1 : 0;
  EvalMetrics m;
  m.detected = static_cast<double>(e.size());
  m.truth = static_cast<double>(a.size());
  m.intersection = static_cast<double>(both);
  m.precision = e.empty() ? 0.0 : m.intersection / m.detected;
  m.recall = a.empty() ? 0.0 : m.intersection / m.truth;
  m.f1 = (m.precision + m.recall) == 0.0 ? 0.0
                                         : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

double select_top1_cutoff(std::span<const double> confidences,
                          const std::vector<bool>& weak_truth) {
  if (confidences.size() != weak_truth.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "confidence and truth lengths differ");
  }
  std::vector<std::size_t> truth;
  for (std::size_t i = 0; i < weak_truth.size(); ++i) {
    if (weak_truth[i]) truth.push_back(i);
  }
  double best_cutoff = 0.05;
  double best_f1 = -1.0;
  for (int step = 1; step <= 19; ++step) {
    const double cutoff = 0.05 * step;
    const double f1 = evaluate(baseline_top1(confidences, cutoff), truth, confidences.size()).f1;
    if (f1 > best_f1) {
      best_f1 = f1;
      best_cutoff = cutoff;
    }
  }
  return best_cutoff;
}

DataSplit split_points(std::size_t n, std::uint64_t seed, double calibration_fraction) {
  if (!(calibration_fraction > 0.0 && calibration_fraction < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "calibration fraction must be in (0, 1)");
  }
  DataSplit split;
  split.seed = seed;
  split.calibration_fraction = calibration_fraction;
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  RngStream rng(seed ^ kSplitSalt);
  rng.shuffle(order);
  const auto n_cal = static_cast<std::size_t>(std::llround(calibration_fraction * static_cast<double>(n)));
  split.calibration.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_cal));
  split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_cal), order.end());
  std::sort(split.calibration.begin(), split.calibration.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

const EvalEntry* EvalReport::find(const std::string& name) const {
  for (const auto& e : entries) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

namespace {

// Weak verdicts of detect_b over the given dataset indices, one stream per
// point so the result is independent of the thread count.
std::vector<BDetection> detect_b_all(ModelUnderTest& model, const Dataset& dataset,
                                     std::span<const std::size_t> indices,
                                     const BThreshold& threshold, const EvalOptions& options) {
  std::vector<BDetection> out(indices.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    while (true) {
      const std::size_t k = next.fetch_add(1);
      if (k >= indices.size()) return;
      try {
        RngStream rng = RngStream::for_point(options.seed ^ kDetectSalt, indices[k]);
        out[k] = detect_b(model, dataset.images.at(indices[k]), threshold, rng, options.transform);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(indices.size());
        return;
      }
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(options.threads, indices.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

EvalEntry random_entry(const std::string& name, std::size_t n_detected,
                       std::span<const std::size_t> truth, std::size_t n_total,
                       const EvalOptions& options, std::uint64_t salt) {
  EvalEntry entry;
  entry.name = name;
  RngStream rng(options.seed ^ kRandomSalt ^ salt);
  const std::size_t trials = std::max<std::size_t>(1, options.random_trials);
  EvalMetrics sum;
  for (std::size_t t = 0; t < trials; ++t) {
    const EvalMetrics m = evaluate(baseline_random(n_detected, n_total, rng), truth, n_total);
    sum.precision += m.precision;
    sum.recall += m.recall;
    sum.f1 += m.f1;
    sum.intersection += m.intersection;
  }
  const double k = static_cast<double>(trials);
  entry.metrics.precision = sum.precision / k;
  entry.metrics.recall = sum.recall / k;
  entry.metrics.f1 = sum.f1 / k;
  entry.metrics.intersection = sum.intersection / k;
  entry.metrics.detected = static_cast<double>(n_detected);
  entry.metrics.truth = static_cast<double>(truth.size());
  entry.extra["trials"] = trials;
  return entry;
}

}  // namespace

EvalReport run_evaluation(const EvalInputs& inputs, const EvalOptions& options) {
  if (inputs.profile == nullptr) throw Error(ErrorCode::kInvalidArgument, "evaluation needs a profile");
  const RobustnessProfile& profile = *inputs.profile;
  if (profile.task != Task::kClassification) {
    throw Error(ErrorCode::kInvalidArgument, "evaluation needs a classification profile");
  }
  if (inputs.bthreshold == nullptr && inputs.wmodel == nullptr) {
    throw Error(ErrorCode::kMissingArtifact, "no detector artifact to evaluate");
  }
  const auto& test = inputs.split.test;
  const auto& cal = inputs.split.calibration;
  const WeakLabeling labeling = label_points(profile, options.cutoff);
  const std::size_t n_test = test.size();

  // All evaluation sets are expressed as positions within the test split.
  std::vector<std::size_t> truth;
  for (std::size_t k = 0; k < n_test; ++k) {
    if (labeling.weak_flags.at(test[k])) truth.push_back(k);
  }

  EvalReport report;
  report.cutoff = options.cutoff;
  report.seed = options.seed;
  report.split_seed = inputs.split.seed;
  report.n_total = n_test;
  report.n_truth = truth.size();

  if (inputs.bthreshold != nullptr) {
    if (inputs.model == nullptr || inputs.dataset == nullptr) {
      throw Error(ErrorCode::kInvalidArgument, "black-box evaluation needs the model and dataset");
    }
    const auto detections = detect_b_all(*inputs.model, *inputs.dataset, test, *inputs.bthreshold, options);
    std::vector<std::size_t> detected;
    for (std::size_t k = 0; k < n_test; ++k) {
      if (detections[k].verdict == Verdict::kWeak) detected.push_back(k);
    }
    EvalEntry entry{"deeprobust_b", evaluate(detected, truth, n_test), {}};
    entry.extra["lambda_threshold"] = inputs.bthreshold->lambda_threshold;
    entry.extra["m_b"] = inputs.bthreshold->m_b;
    report.entries.push_back(std::move(entry));
    report.entries.push_back(random_entry("random_b", detected.size(), truth, n_test, options, 1));
  }

  if (inputs.wmodel != nullptr) {
    if (!inputs.features) throw Error(ErrorCode::kInvalidArgument, "white-box evaluation needs features");
    std::vector<std::size_t> detected;
    for (std::size_t k = 0; k < n_test; ++k) {
      if (detect_w(*inputs.wmodel, inputs.features->row(test[k])).verdict == Verdict::kWeak) {
        detected.push_back(k);
      }
    }
    report.entries.push_back({"deeprobust_w", evaluate(detected, truth, n_test), {}});
    report.entries.push_back(random_entry("random_w", detected.size(), truth, n_test, options, 2));
  }

  std::vector<double> cal_conf;
  std::vector<bool> cal_truth;
  for (std::size_t i : cal) {
    cal_conf.push_back(profile.points.at(i).top1_confidence);
    cal_truth.push_back(labeling.weak_flags[i]);
  }
  std::vector<double> test_conf;
  for (std::size_t i : test) test_conf.push_back(profile.points.at(i).top1_confidence);
  const double conf_cutoff = cal.empty() ? 0.5 : select_top1_cutoff(cal_conf, cal_truth);
  EvalEntry top1{"top1", evaluate(baseline_top1(test_conf, conf_cutoff), truth, n_test), {}};
  top1.extra["confidence_cutoff"] = conf_cutoff;
  report.entries.push_back(std::move(top1));
  return report;
}

nlohmann::ordered_json eval_to_json(const EvalReport& report) {
  nlohmann::ordered_json doc;
  doc["cutoff"] = report.cutoff;
  doc["seed"] = report.seed;
  doc["split_seed"] = report.split_seed;
  doc["n_test"] = report.n_total;
  doc["n_weak_truth"] = report.n_truth;
  nlohmann::ordered_json entries = nlohmann::ordered_json::array();
  for (const auto& e : report.entries) {
    nlohmann::ordered_json item;
    item["name"] = e.name;
    item["precision"] = e.metrics.precision;
    item["recall"] = e.metrics.recall;
    item["f1"] = e.metrics.f1;
    item["detected"] = e.metrics.detected;
    item["truth"] = e.metrics.truth;
    item["intersection"] = e.metrics.intersection;
    for (const auto& [k, v] : e.extra.items()) item[k] = v;
    entries.push_back(std::move(item));
  }
  doc["detectors"] = std::move(entries);
  return doc;
}

}  // namespace robometer
