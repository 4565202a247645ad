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

#include <chrono>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "robometer/dataset.hpp"
#include "robometer/image.hpp"
#include "robometer/nn.hpp"

namespace robometer {

struct ModelInfo {
  std::string name;
  Task task = Task::kClassification;
  std::size_t num_classes = 0;
  /// Absent when the model exposes no penultimate features (black box).
  std::optional<std::size_t> feature_dim;
  ImageDims input_dims;

  friend bool operator==(const ModelInfo&, const ModelInfo&) = default;
};

/// Throws kProtocol unless classification implies num_classes >= 2.
void validate_model_info(const ModelInfo& info);

struct Prediction {
  std::vector<float> outputs;  // K logits/probabilities, or one scalar
  double top1_confidence = 0.0;
  std::optional<std::vector<float>> features;

  /// Argmax with ties broken toward the lowest index.
  std::size_t top1() const;
  friend bool operator==(const Prediction&, const Prediction&) = default;
};

/// Max softmax probability. Rows that are already non-negative and sum to
/// 1 within 1e-3 are used as probabilities directly.
double top1_confidence(std::span<const float> outputs);

/// Uniform query surface over built-in and external models.
class ModelUnderTest {
 public:
  virtual ~ModelUnderTest() = default;

  virtual const ModelInfo& info() const = 0;

  /// Order-preserving; features are filled iff requested and available.
  virtual std::vector<Prediction> predict_batch(std::span<const Image> images,
                                                bool want_features) = 0;
};

/// Returns the model's metadata. Subprocess adapters perform the hello
/// exchange when they start, so this never blocks.
inline const ModelInfo& handshake(const ModelUnderTest& model) { return model.info(); }

/// Wraps a DenseNet over flattened images. Safe for concurrent calls.
class BuiltinModel final : public ModelUnderTest {
 public:
  BuiltinModel(DenseNet net, ImageDims input_dims, std::string name = "builtin");

  const ModelInfo& info() const override { return info_; }
  std::vector<Prediction> predict_batch(std::span<const Image> images,
                                        bool want_features) override;
  const DenseNet& net() const { return net_; }

 private:
  DenseNet net_;
  ModelInfo info_;
};

struct SubprocessOptions {
  std::chrono::milliseconds timeout{60'000};
  std::size_t max_batch = 64;
};

/// Talks the NDJSON protocol to a child process started with /bin/sh -c.
/// Requests are serialized; replies must arrive in order.
class SubprocessModel final : public ModelUnderTest {
 public:
  SubprocessModel(const std::string& command, SubprocessOptions options = {});
  ~SubprocessModel() override;
  SubprocessModel(const SubprocessModel&) = delete;
  SubprocessModel& operator=(const SubprocessModel&) = delete;

  const ModelInfo& info() const override { return info_; }
  std::vector<Prediction> predict_batch(std::span<const Image> images,
                                        bool want_features) override;

 private:
  std::string exchange(const std::string& request);
  void terminate_child();

  SubprocessOptions options_;
  ModelInfo info_;
  std::mutex mutex_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  std::int64_t next_id_ = 1;
};

struct ModelOpenOptions {
  SubprocessOptions subprocess;
};

/// "exec:<command line>" starts an external model; anything else is a
/// built-in model file whose metadata carries input_dims.
std::unique_ptr<ModelUnderTest> open_model(const std::string& source,
                                           const ModelOpenOptions& options = {});

/// Writes a built-in model file with the metadata open_model expects.
void save_builtin_model(const DenseNet& net, const ImageDims& input_dims, const std::string& name,
                        const std::filesystem::path& path, Task task);

/// Flattens images into an N x (H*W*C) matrix.
Eigen::MatrixXf flatten_images(std::span<const Image> images);

}  // namespace robometer
