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
#include <vector>

#include <nlohmann/json.hpp>

#include "robometer/image.hpp"
#include "robometer/tensorpack.hpp"

namespace robometer {

enum class Task { kClassification, kRegression };

std::string task_name(Task task);
Task parse_task(const std::string& name);

/// On-disk description of a dataset: a JSON document pointing at two packs.
struct DatasetManifest {
  Task task = Task::kClassification;
  std::size_t num_classes = 0;
  ImageDims image_dims;
  std::filesystem::path images;   // N x H x W x C f32
  std::filesystem::path targets;  // N u32 labels, or N f32 for regression
  std::vector<std::string> class_names;
  nlohmann::json metadata = nlohmann::json::object();
};

/// Dataset held in memory.
struct Dataset {
  Task task = Task::kClassification;
  std::size_t num_classes = 0;
  ImageDims image_dims;
  std::vector<Image> images;
  std::vector<std::uint32_t> labels;       // classification
  std::vector<float> regression_targets;   // regression
  std::vector<std::string> class_names;
  nlohmann::json metadata = nlohmann::json::object();

  std::size_t size() const { return images.size(); }
};

nlohmann::json manifest_to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(const nlohmann::json& doc);

/// Validates labels < num_classes and pixel values in [0, 1].
void validate_dataset(const Dataset& dataset);

/// Loads the manifest and both packs; relative paths resolve against the
/// manifest's directory.
Dataset load_dataset(const std::filesystem::path& manifest_path);

/// Writes images.tpak, targets.tpak and manifest.json into `directory`.
/// Returns the manifest path.
std::filesystem::path save_dataset(const Dataset& dataset, const std::filesystem::path& directory);

TensorPack images_to_pack(const std::vector<Image>& images);
std::vector<Image> images_from_pack(const TensorPack& pack);

}  // namespace robometer
