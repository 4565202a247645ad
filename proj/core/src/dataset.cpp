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

#include "robometer/dataset.hpp"

#include <fstream>

#include "robometer/error.hpp"

namespace robometer {

Image::Image(ImageDims d, std::vector<float> values) : dims(d), pixels(std::move(values)) {
  if (pixels.size() != dims.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "image pixel count does not match dims");
  }
}

std::string task_name(Task task) {
  return task == Task::kClassification ? "classification" : "regression";
}

Task parse_task(const std::string& name) {
  if (name == "classification") return Task::kClassification;
  if (name == "regression") return Task::kRegression;
  throw Error(ErrorCode::kFormat, "unknown task: " + name);
}

nlohmann::json manifest_to_json(const DatasetManifest& manifest) {
  nlohmann::json doc;
  doc["task"] = task_name(manifest.task);
  if (manifest.task == Task::kClassification) doc["num_classes"] = manifest.num_classes;
  doc["image_dims"] = {manifest.image_dims.height, manifest.image_dims.width,
                       manifest.image_dims.channels};
  doc["images"] = manifest.images.generic_string();
  doc["targets"] = manifest.targets.generic_string();
  if (!manifest.class_names.empty()) doc["class_names"] = manifest.class_names;
  doc["metadata"] = manifest.metadata;
  return doc;
}

DatasetManifest manifest_from_json(const nlohmann::json& doc) {
  DatasetManifest manifest;
  try {
    manifest.task = parse_task(doc.at("task").get<std::string>());
    if (manifest.task == Task::kClassification) {
      manifest.num_classes = doc.at("num_classes").get<std::size_t>();
    }
    const auto& dims = doc.at("image_dims");
    if (!dims.is_array() || dims.size() != 3) {
      throw Error(ErrorCode::kFormat, "manifest image_dims must be [H, W, C]");
    }
    manifest.image_dims = {dims[0].get<std::size_t>(), dims[1].get<std::size_t>(),
                           dims[2].get<std::size_t>()};
    manifest.images = doc.at("images").get<std::string>();
    manifest.targets = doc.at("targets").get<std::string>();
    if (doc.contains("class_names")) {
      manifest.class_names = doc["class_names"].get<std::vector<std::string>>();
    }
    if (doc.contains("metadata")) manifest.metadata = doc["metadata"];
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("manifest: ") + e.what());
  }
  return manifest;
}

TensorPack images_to_pack(const std::vector<Image>& images) {
  if (images.empty()) throw Error(ErrorCode::kInvalidArgument, "no images to pack");
  const ImageDims d = images.front().dims;
  std::vector<float> values;
  values.reserve(images.size() * d.size());
  for (const auto& image : images) {
    if (image.dims != d) throw Error(ErrorCode::kDimensionMismatch, "images differ in dims");
    values.insert(values.end(), image.pixels.begin(), image.pixels.end());
  }
  return TensorPack::f32({images.size(), d.height, d.width, d.channels}, std::move(values));
}

std::vector<Image> images_from_pack(const TensorPack& pack) {
  if (pack.rank() != 4) throw Error(ErrorCode::kFormat, "image pack must be N x H x W x C");
  const auto& dims = pack.dims();
  const ImageDims d{dims[1], dims[2], dims[3]};
  const auto values = pack.f32_values();
  std::vector<Image> images;
  images.reserve(dims[0]);
  for (std::size_t i = 0; i < dims[0]; ++i) {
    auto first = values.begin() + static_cast<std::ptrdiff_t>(i * d.size());
    images.emplace_back(d, std::vector<float>(first, first + static_cast<std::ptrdiff_t>(d.size())));
  }
  return images;
}

void validate_dataset(const Dataset& dataset) {
  if (dataset.task == Task::kClassification) {
    if (dataset.labels.size() != dataset.images.size()) {
      throw Error(ErrorCode::kDimensionMismatch, "label count differs from image count");
    }
    for (std::uint32_t label : dataset.labels) {
      if (label >= dataset.num_classes) {
        throw Error(ErrorCode::kFormat, "label " + std::to_string(label) +
                                            " out of range for " +
                                            std::to_string(dataset.num_classes) + " classes");
      }
    }
  } else if (dataset.regression_targets.size() != dataset.images.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "target count differs from image count");
  }
  for (const auto& image : dataset.images) {
    if (image.dims != dataset.image_dims) {
      throw Error(ErrorCode::kDimensionMismatch, "image dims differ from manifest");
    }
    for (float v : image.pixels) {
      if (!(v >= 0.0f && v <= 1.0f)) {
        throw Error(ErrorCode::kFormat, "image value outside [0, 1]");
      }
    }
  }
}

Dataset load_dataset(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open manifest: " + manifest_path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("manifest is not JSON: ") + e.what());
  }
  const DatasetManifest manifest = manifest_from_json(doc);
  const auto base = manifest_path.parent_path();
  auto resolve = [&](const std::filesystem::path& p) { return p.is_absolute() ? p : base / p; };

  Dataset dataset;
  dataset.task = manifest.task;
  dataset.num_classes = manifest.num_classes;
  dataset.image_dims = manifest.image_dims;
  dataset.class_names = manifest.class_names;
  dataset.metadata = manifest.metadata;
  dataset.images = images_from_pack(read_tensorpack(resolve(manifest.images)));

  const TensorPack targets = read_tensorpack(resolve(manifest.targets));
  if (manifest.task == Task::kClassification) {
    const auto labels = targets.u32_values();
    dataset.labels.assign(labels.begin(), labels.end());
  } else {
    const auto values = targets.f32_values();
    dataset.regression_targets.assign(values.begin(), values.end());
  }
  validate_dataset(dataset);
  return dataset;
}

std::filesystem::path save_dataset(const Dataset& dataset, const std::filesystem::path& directory) {
  validate_dataset(dataset);
  std::filesystem::create_directories(directory);
  write_tensorpack(images_to_pack(dataset.images), directory / "images.tpak");
  if (dataset.task == Task::kClassification) {
    write_tensorpack(TensorPack::u32({dataset.labels.size()}, dataset.labels),
                     directory / "targets.tpak");
  } else {
    write_tensorpack(TensorPack::f32({dataset.regression_targets.size()},
                                     dataset.regression_targets),
                     directory / "targets.tpak");
  }
  DatasetManifest manifest;
  manifest.task = dataset.task;
  manifest.num_classes = dataset.num_classes;
  manifest.image_dims = dataset.image_dims;
  manifest.images = "images.tpak";
  manifest.targets = "targets.tpak";
  manifest.class_names = dataset.class_names;
  manifest.metadata = dataset.metadata;

  const auto path = directory / "manifest.json";
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write manifest: " + path.string());
  out << manifest_to_json(manifest).dump(2) << '\n';
  return path;
}

}  // namespace robometer
