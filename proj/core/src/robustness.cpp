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

#include "robometer/robustness.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <istream>
#include <mutex>
#include <ostream>
#include <thread>

#include "robometer/error.hpp"

namespace robometer {

std::string recipe_name(NeighborRecipe recipe) {
  return recipe == NeighborRecipe::kSpatial ? "spatial" : "rain-fog";
}

NeighborRecipe parse_recipe(const std::string& name) {
  if (name == "spatial") return NeighborRecipe::kSpatial;
  if (name == "rain-fog" || name == "rain_fog_mix") return NeighborRecipe::kRainFogMix;
  throw Error(ErrorCode::kInvalidArgument, "unknown recipe: " + name);
}

std::vector<Neighbor> generate_neighbors(const Image& image, std::size_t m, RngStream& rng,
                                         NeighborRecipe recipe, const TransformOptions& options) {
  if (m == 0) throw Error(ErrorCode::kInvalidArgument, "neighbor count m must be >= 1");
  std::vector<Neighbor> neighbors;
  neighbors.reserve(m);
  if (recipe == NeighborRecipe::kSpatial) {
    for (std::size_t i = 0; i < m; ++i) {
      const TransformSpec spec = sample_spatial(rng, image.dims.width, image.dims.height, options);
      neighbors.push_back({spec, apply_transform(image, spec, options)});
    }
    return neighbors;
  }
  const std::size_t n_rain = (m + 1) / 2;
  for (std::size_t i = 0; i < m; ++i) {
    const double intensity = rng.uniform(0.2, 0.8);
    const TransformSpec spec =
        i < n_rain ? TransformSpec::rain(intensity, rng.next_u64()) : TransformSpec::fog(intensity);
    neighbors.push_back({spec, apply_transform(image, spec, options)});
  }
  return neighbors;
}

std::vector<Neighbor> generate_neighbors(const Image& image, std::size_t m,
                                         const TransformSpec& forced,
                                         const TransformOptions& options) {
  if (m == 0) throw Error(ErrorCode::kInvalidArgument, "neighbor count m must be >= 1");
  std::vector<Neighbor> neighbors;
  const Image transformed = apply_transform(image, forced, options);
  for (std::size_t i = 0; i < m; ++i) neighbors.push_back({forced, transformed});
  return neighbors;
}

bool classification_correct(const Prediction& prediction, std::uint32_t true_label) {
  return prediction.top1() == true_label;
}

bool regression_correct(double neighbor_output, double original_output, double epsilon) {
  if (!(epsilon > 0.0)) throw Error(ErrorCode::kInvalidArgument, "epsilon must be > 0");
  return std::abs(neighbor_output - original_output) <= epsilon;
}

double neighbor_accuracy(const std::vector<bool>& correct_flags) {
  if (correct_flags.empty()) throw Error(ErrorCode::kInvalidArgument, "no predictions to score");
  std::size_t correct = 0;
  for (bool f : correct_flags) correct += f ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(correct_flags.size());
}

double simpson_lambda(std::span<const std::uint32_t> predicted_classes, std::size_t num_classes) {
  if (predicted_classes.empty()) throw Error(ErrorCode::kInvalidArgument, "no predictions to score");
  std::vector<std::size_t> counts(num_classes, 0);
  for (std::uint32_t c : predicted_classes) {
    if (c >= num_classes) throw Error(ErrorCode::kInvalidArgument, "class id out of range");
    ++counts[c];
  }
  const double n = static_cast<double>(predicted_classes.size());
  double lambda = 0.0;
  for (std::size_t c : counts) {
    const double p = static_cast<double>(c) / n;
    lambda += p * p;
  }
  return lambda;
}

std::string transforms_digest(std::span<const TransformSpec> specs) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (const auto& spec : specs) {
    for (char ch : transform_to_json(spec).dump()) {
      hash ^= static_cast<unsigned char>(ch);
      hash *= 0x100000001b3ULL;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

std::vector<double> RobustnessProfile::accuracies() const {
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(p.neighbor_accuracy);
  return out;
}

std::vector<double> RobustnessProfile::lambdas() const {
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto& p : points) {
    if (!p.diversity_lambda) {
      throw Error(ErrorCode::kInvalidArgument, "profile has no diversity values (regression?)");
    }
    out.push_back(*p.diversity_lambda);
  }
  return out;
}

std::optional<FeatureMatrix> RobustnessProfile::features() const {
  if (points.empty() || !points.front().features) return std::nullopt;
  FeatureMatrix matrix(points.size(), points.front().features->size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& f = points[i].features;
    if (!f || f->size() != matrix.cols) return std::nullopt;
    std::copy(f->begin(), f->end(), matrix.row(i).begin());
  }
  return matrix;
}

namespace {

PointProfile profile_point(ModelUnderTest& model, const Dataset& dataset, std::size_t index,
                           const ProfileOptions& options) {
  const Image& original = dataset.images[index];
  std::vector<Neighbor> neighbors;
  if (options.forced_spec) {
    neighbors = generate_neighbors(original, options.m, *options.forced_spec, options.transform);
  } else {
    RngStream rng = RngStream::for_point(options.seed, index);
    neighbors = generate_neighbors(original, options.m, rng, options.recipe, options.transform);
  }

  std::vector<Image> batch;
  batch.reserve(options.m + 1);
  batch.push_back(original);
  PointProfile point;
  point.index = index;
  for (auto& n : neighbors) {
    point.transform_specs.push_back(n.spec);
    batch.push_back(std::move(n.image));
  }
  point.transforms_digest = transforms_digest(point.transform_specs);

  // Features are only needed for the original; request them in a separate
  // single-image call so the neighbor batch stays small on the wire.
  std::vector<Prediction> predictions = model.predict_batch(batch, false);
  if (predictions.size() != batch.size()) {
    throw Error(ErrorCode::kAdapter, "model returned the wrong number of predictions");
  }
  if (options.want_features && model.info().feature_dim) {
    auto with_features = model.predict_batch(std::span<const Image>(&original, 1), true);
    point.features = std::move(with_features.front().features);
  }

  if (dataset.task == Task::kClassification) {
    const std::uint32_t label = dataset.labels[index];
    point.label = label;
    for (const auto& p : predictions) {
      point.neighbor_predictions.push_back(static_cast<std::uint32_t>(p.top1()));
      point.neighbor_correct.push_back(classification_correct(p, label));
    }
    point.predicted = point.neighbor_predictions.front();
    point.top1_confidence = predictions.front().top1_confidence;
    point.diversity_lambda = simpson_lambda(point.neighbor_predictions, model.info().num_classes);
  } else {
    const double reference = predictions.front().outputs.at(0);
    point.original_output = reference;
    for (const auto& p : predictions) {
      point.neighbor_correct.push_back(regression_correct(p.outputs.at(0), reference, options.epsilon));
    }
  }
  point.original_correct = point.neighbor_correct.front();
  point.neighbor_accuracy = neighbor_accuracy(point.neighbor_correct);
  return point;
}

}  // namespace

RobustnessProfile profile_dataset(ModelUnderTest& model, const Dataset& dataset,
                                  const ProfileOptions& options) {
  const ModelInfo& info = model.info();
  if (info.input_dims != dataset.image_dims) {
    throw Error(ErrorCode::kDimensionMismatch, "model input dims differ from dataset image dims");
  }
  if (info.task != dataset.task) {
    throw Error(ErrorCode::kInvalidArgument, "model task differs from dataset task");
  }
  if (options.m == 0) throw Error(ErrorCode::kInvalidArgument, "neighbor count m must be >= 1");
  if (dataset.task == Task::kRegression && !(options.epsilon > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon must be > 0");
  }

  RobustnessProfile profile;
  profile.model_name = info.name;
  profile.dataset_id = options.dataset_id;
  profile.task = dataset.task;
  profile.num_classes = info.num_classes;
  profile.m = options.m;
  profile.seed = options.seed;
  profile.recipe = options.recipe;
  profile.epsilon = dataset.task == Task::kRegression ? options.epsilon : 0.0;
  profile.points.resize(dataset.size());

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&]() {
    while (!failed.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= dataset.size()) return;
      try {
        profile.points[i] = profile_point(model, dataset, i, options);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        failed.store(true);
        return;
      }
    }
  };

  const std::size_t threads = std::max<std::size_t>(1, std::min(options.threads, dataset.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return profile;
}

std::vector<std::size_t> WeakLabeling::weak_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < weak_flags.size(); ++i) {
    if (weak_flags[i]) out.push_back(i);
  }
  return out;
}

std::size_t WeakLabeling::weak_count() const {
  std::size_t n = 0;
  for (bool w : weak_flags) n += w ? 1 : 0;
  return n;
}

WeakLabeling label_points(const RobustnessProfile& profile, double cutoff) {
  if (!(cutoff > 0.0 && cutoff <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "cutoff must be in (0, 1]");
  }
  WeakLabeling labeling;
  labeling.cutoff = cutoff;
  labeling.weak_flags.reserve(profile.points.size());
  for (const auto& p : profile.points) labeling.weak_flags.push_back(p.neighbor_accuracy < cutoff);
  return labeling;
}

nlohmann::ordered_json point_to_json(const PointProfile& point, std::size_t m) {
  nlohmann::ordered_json doc;
  doc["index"] = point.index;
  doc["label"] = point.label ? nlohmann::ordered_json(*point.label) : nlohmann::ordered_json(nullptr);
  doc["original_correct"] = point.original_correct;
  doc["neighbor_accuracy"] = point.neighbor_accuracy;
  doc["diversity_lambda"] = point.diversity_lambda ? nlohmann::ordered_json(*point.diversity_lambda)
                                                   : nlohmann::ordered_json(nullptr);
  doc["m"] = m;
  doc["transforms_digest"] = point.transforms_digest;
  if (point.label) {
    doc["predicted"] = point.predicted;
    doc["top1_confidence"] = point.top1_confidence;
  } else {
    doc["original_output"] = point.original_output;
  }
  return doc;
}

void write_profile_jsonl(const RobustnessProfile& profile, std::ostream& out) {
  for (const auto& p : profile.points) out << point_to_json(p, profile.m).dump() << '\n';
}

void write_profile_csv(const RobustnessProfile& profile, std::ostream& out) {
  out << "index,label,original_correct,neighbor_accuracy,diversity_lambda,m,transforms_digest\n";
  for (const auto& p : profile.points) {
    out << p.index << ',';
    if (p.label) out << *p.label;
    out << ',' << (p.original_correct ? 1 : 0) << ','
        << nlohmann::json(p.neighbor_accuracy).dump() << ',';
    if (p.diversity_lambda) out << nlohmann::json(*p.diversity_lambda).dump();
    out << ',' << profile.m << ',' << p.transforms_digest << '\n';
  }
}

nlohmann::ordered_json profile_header(const RobustnessProfile& profile) {
  nlohmann::ordered_json doc;
  doc["model"] = profile.model_name;
  doc["dataset"] = profile.dataset_id;
  doc["task"] = task_name(profile.task);
  doc["num_classes"] = profile.num_classes;
  doc["m"] = profile.m;
  doc["seed"] = profile.seed;
  doc["recipe"] = recipe_name(profile.recipe);
  doc["epsilon"] = profile.epsilon;
  doc["points"] = profile.points.size();
  return doc;
}

RobustnessProfile read_profile(const nlohmann::json& header, std::istream& records) {
  RobustnessProfile profile;
  try {
    profile.model_name = header.at("model").get<std::string>();
    profile.dataset_id = header.at("dataset").get<std::string>();
    profile.task = parse_task(header.at("task").get<std::string>());
    profile.num_classes = header.at("num_classes").get<std::size_t>();
    profile.m = header.at("m").get<std::size_t>();
    profile.seed = header.at("seed").get<std::uint64_t>();
    profile.recipe = parse_recipe(header.at("recipe").get<std::string>());
    profile.epsilon = header.at("epsilon").get<double>();
    std::string line;
    while (std::getline(records, line)) {
      if (line.empty()) continue;
      const auto doc = nlohmann::json::parse(line);
      PointProfile p;
      p.index = doc.at("index").get<std::size_t>();
      if (!doc.at("label").is_null()) p.label = doc["label"].get<std::uint32_t>();
      p.original_correct = doc.at("original_correct").get<bool>();
      p.neighbor_accuracy = doc.at("neighbor_accuracy").get<double>();
      if (!doc.at("diversity_lambda").is_null()) {
        p.diversity_lambda = doc["diversity_lambda"].get<double>();
      }
      p.transforms_digest = doc.at("transforms_digest").get<std::string>();
      p.predicted = doc.value("predicted", 0u);
      p.top1_confidence = doc.value("top1_confidence", 0.0);
      p.original_output = doc.value("original_output", 0.0);
      if (p.index != profile.points.size()) {
        throw Error(ErrorCode::kFormat, "profile records out of order at index " +
                                            std::to_string(p.index));
      }
      profile.points.push_back(std::move(p));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("profile report: ") + e.what());
  }
  const auto expected = header.value("points", profile.points.size());
  if (expected != profile.points.size()) {
    throw Error(ErrorCode::kFormat, "profile report has " + std::to_string(profile.points.size()) +
                                        " records, header says " + std::to_string(expected));
  }
  return profile;
}

}  // namespace robometer
