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
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace robometer {

enum class OutputHead { kSoftmax, kLinear };

/// Fully connected network: ReLU hidden layers, softmax or linear output.
/// Weights for layer l are (layer_sizes[l+1] x layer_sizes[l]).
template <typename Scalar>
struct BasicDenseNet {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  std::vector<std::size_t> layer_sizes;
  OutputHead head = OutputHead::kSoftmax;
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  std::size_t input_dim() const { return layer_sizes.front(); }
  std::size_t output_dim() const { return layer_sizes.back(); }
  std::size_t penultimate_dim() const { return layer_sizes[layer_sizes.size() - 2]; }
  std::size_t num_layers() const { return weights.size(); }

  template <typename Other>
  BasicDenseNet<Other> cast() const {
    BasicDenseNet<Other> out;
    out.layer_sizes = layer_sizes;
    out.head = head;
    for (const auto& w : weights) out.weights.push_back(w.template cast<Other>());
    for (const auto& b : biases) out.biases.push_back(b.template cast<Other>());
    return out;
  }
};

using DenseNet = BasicDenseNet<float>;

template <typename Scalar>
struct ForwardResult {
  typename BasicDenseNet<Scalar>::Matrix outputs;      // N x K (probabilities for softmax)
  typename BasicDenseNet<Scalar>::Matrix penultimate;  // N x layer_sizes[-2]
};

template <typename Scalar>
struct Gradients {
  std::vector<typename BasicDenseNet<Scalar>::Matrix> weights;
  std::vector<typename BasicDenseNet<Scalar>::Vector> biases;
  double loss = 0.0;
};

/// He-normal weights (variance 2 / fan_in), zero biases.
template <typename Scalar>
BasicDenseNet<Scalar> init_dense_net(const std::vector<std::size_t>& layer_sizes, OutputHead head,
                                     std::uint64_t seed);

/// `batch` is N x input_dim, one sample per row.
template <typename Scalar>
ForwardResult<Scalar> forward(const BasicDenseNet<Scalar>& net,
                              const typename BasicDenseNet<Scalar>::Matrix& batch);

/// Weighted mean cross-entropy, sum_i w[y_i] * -log p_i[y_i] / N. Empty
/// class_weights means all ones.
template <typename Scalar>
double classification_loss(const BasicDenseNet<Scalar>& net,
                           const typename BasicDenseNet<Scalar>::Matrix& batch,
                           std::span<const std::uint32_t> labels,
                           std::span<const double> class_weights = {});

/// Mean of 0.5 * ||output - target||^2 over rows.
template <typename Scalar>
double regression_loss(const BasicDenseNet<Scalar>& net,
                       const typename BasicDenseNet<Scalar>::Matrix& batch,
                       const typename BasicDenseNet<Scalar>::Matrix& targets);

template <typename Scalar>
Gradients<Scalar> backward(const BasicDenseNet<Scalar>& net,
                           const typename BasicDenseNet<Scalar>::Matrix& batch,
                           std::span<const std::uint32_t> labels,
                           std::span<const double> class_weights = {});

template <typename Scalar>
Gradients<Scalar> backward(const BasicDenseNet<Scalar>& net,
                           const typename BasicDenseNet<Scalar>::Matrix& batch,
                           const typename BasicDenseNet<Scalar>::Matrix& targets);

/// Lowest index wins ties.
std::size_t argmax(std::span<const float> values);

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 128;
  std::size_t max_epochs = 100;
  std::uint64_t seed = 0;
  /// Explicit per-class weights; when empty and balance_classes is set,
  /// weights are N / (K * count_c).
  std::vector<double> class_weights;
  bool balance_classes = true;
  std::size_t early_stop_patience = 5;
  /// Held-out share used for early stopping; 0 monitors training loss.
  double validation_fraction = 0.2;
};

/// Features are N x D; exactly one of labels (softmax head) or targets
/// (linear head, N x K) is used.
struct TrainingSet {
  Eigen::MatrixXf features;
  std::vector<std::uint32_t> labels;
  Eigen::MatrixXf targets;

  std::size_t size() const { return static_cast<std::size_t>(features.rows()); }
};

struct TrainReport {
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  double best_score = 0.0;  // validation F1, or negated loss
  std::vector<double> epoch_losses;
  std::vector<double> class_weights;
};

/// Mini-batch Adam with early stopping on validation F1 (classification) or
/// validation loss (regression); the best epoch's parameters are returned.
/// Aborts with kNumerical on a non-finite loss.
DenseNet train(DenseNet net, const TrainingSet& data, const TrainConfig& config,
               TrainReport* report = nullptr);

/// F1 of class 1 for two classes, macro F1 otherwise.
double f1_score(std::span<const std::uint32_t> truth, std::span<const std::uint32_t> predicted,
                std::size_t num_classes);

/// Model container: "RBNN", u8 version, u32 header length, JSON header, then
/// one TensorPack per weight and bias in layer order.
void save_model(const DenseNet& net, const std::filesystem::path& path,
                const nlohmann::json& metadata = nlohmann::json::object());
DenseNet load_model(const std::filesystem::path& path, nlohmann::json* metadata = nullptr);

}  // namespace robometer
