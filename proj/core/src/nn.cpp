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

#include "robometer/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "robometer/error.hpp"
#include "robometer/rng.hpp"
#include "robometer/tensorpack.hpp"

namespace robometer {
namespace {

template <typename Scalar>
using MatrixT = typename BasicDenseNet<Scalar>::Matrix;

// Pre-activations and activations of every layer, kept for backprop.
template <typename Scalar>
struct Trace {
  std::vector<MatrixT<Scalar>> pre;   // z_l, N x out_l
  std::vector<MatrixT<Scalar>> post;  // a_l; post[0] is the input
};

template <typename Scalar>
void softmax_rows(MatrixT<Scalar>& z) {
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const Scalar peak = z.row(i).maxCoeff();
    z.row(i) = (z.row(i).array() - peak).exp();
    z.row(i) /= z.row(i).sum();
  }
}

template <typename Scalar>
Trace<Scalar> run(const BasicDenseNet<Scalar>& net, const MatrixT<Scalar>& batch) {
  if (static_cast<std::size_t>(batch.cols()) != net.input_dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "batch has " + std::to_string(batch.cols()) + " columns, net expects " +
                    std::to_string(net.input_dim()));
  }
  Trace<Scalar> trace;
  trace.post.push_back(batch);
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    MatrixT<Scalar> z = trace.post.back() * net.weights[l].transpose();
    z.rowwise() += net.biases[l].transpose();
    trace.pre.push_back(z);
    const bool last = l + 1 == net.num_layers();
    if (!last) {
      trace.post.push_back(z.cwiseMax(Scalar(0)));
    } else {
      if (net.head == OutputHead::kSoftmax) softmax_rows<Scalar>(z);
      trace.post.push_back(std::move(z));
    }
  }
  return trace;
}

template <typename Scalar>
Gradients<Scalar> backprop(const BasicDenseNet<Scalar>& net, const Trace<Scalar>& trace,
                           MatrixT<Scalar> delta) {
  const std::size_t layers = net.num_layers();
  Gradients<Scalar> grads;
  grads.weights.resize(layers);
  grads.biases.resize(layers);
  for (std::size_t l = layers; l-- > 0;) {
    grads.weights[l] = delta.transpose() * trace.post[l];
    grads.biases[l] = delta.colwise().sum().transpose();
    if (l > 0) {
      MatrixT<Scalar> upstream = delta * net.weights[l];
      const auto& z = trace.pre[l - 1];
      delta = upstream.cwiseProduct(
          z.unaryExpr([](Scalar v) { return v > Scalar(0) ? Scalar(1) : Scalar(0); }));
    }
  }
  return grads;
}

double weight_for(std::span<const double> class_weights, std::uint32_t label) {
  if (class_weights.empty()) return 1.0;
  if (label >= class_weights.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "class weight missing for label");
  }
  return class_weights[label];
}

template <typename Scalar>
void check_labels(const BasicDenseNet<Scalar>& net, const MatrixT<Scalar>& batch,
                  std::span<const std::uint32_t> labels) {
  if (net.head != OutputHead::kSoftmax) {
    throw Error(ErrorCode::kInvalidArgument, "class labels need a softmax head");
  }
  if (labels.size() != static_cast<std::size_t>(batch.rows())) {
    throw Error(ErrorCode::kDimensionMismatch, "label count differs from batch rows");
  }
  for (auto y : labels) {
    if (y >= net.output_dim()) throw Error(ErrorCode::kDimensionMismatch, "label out of range");
  }
}

template <typename Scalar>
void check_targets(const BasicDenseNet<Scalar>& net, const MatrixT<Scalar>& batch,
                   const MatrixT<Scalar>& targets) {
  if (targets.rows() != batch.rows() ||
      static_cast<std::size_t>(targets.cols()) != net.output_dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "targets shape differs from outputs");
  }
}

}  // namespace

template <typename Scalar>
BasicDenseNet<Scalar> init_dense_net(const std::vector<std::size_t>& layer_sizes, OutputHead head,
                                     std::uint64_t seed) {
  if (layer_sizes.size() < 2) throw Error(ErrorCode::kInvalidArgument, "need at least 2 layers");
  for (std::size_t s : layer_sizes) {
    if (s == 0) throw Error(ErrorCode::kInvalidArgument, "layer sizes must be >= 1");
  }
  BasicDenseNet<Scalar> net;
  net.layer_sizes = layer_sizes;
  net.head = head;
  RngStream rng(seed);
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const auto fan_in = static_cast<Eigen::Index>(layer_sizes[l]);
    const auto fan_out = static_cast<Eigen::Index>(layer_sizes[l + 1]);
    const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
    MatrixT<Scalar> w(fan_out, fan_in);
    for (Eigen::Index r = 0; r < fan_out; ++r) {
      for (Eigen::Index c = 0; c < fan_in; ++c) w(r, c) = static_cast<Scalar>(scale * rng.normal());
    }
    net.weights.push_back(std::move(w));
    net.biases.push_back(BasicDenseNet<Scalar>::Vector::Zero(fan_out));
  }
  return net;
}

template <typename Scalar>
ForwardResult<Scalar> forward(const BasicDenseNet<Scalar>& net, const MatrixT<Scalar>& batch) {
  Trace<Scalar> trace = run(net, batch);
  ForwardResult<Scalar> result;
  result.outputs = std::move(trace.post.back());
  result.penultimate = std::move(trace.post[trace.post.size() - 2]);
  return result;
}

template <typename Scalar>
double classification_loss(const BasicDenseNet<Scalar>& net, const MatrixT<Scalar>& batch,
                           std::span<const std::uint32_t> labels,
                           std::span<const double> class_weights) {
  check_labels(net, batch, labels);
  Trace<Scalar> trace = run(net, batch);
  const auto& logits = trace.pre.back();
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double peak = static_cast<double>(logits.row(i).maxCoeff());
    double sum = 0.0;
    for (Eigen::Index k = 0; k < logits.cols(); ++k) {
      sum += std::exp(static_cast<double>(logits(i, k)) - peak);
    }
    const double log_p = static_cast<double>(logits(i, labels[i])) - peak - std::log(sum);
    total += weight_for(class_weights, labels[i]) * -log_p;
  }
  return total / static_cast<double>(batch.rows());
}

template <typename Scalar>
double regression_loss(const BasicDenseNet<Scalar>& net, const MatrixT<Scalar>& batch,
                       const MatrixT<Scalar>& targets) {
  if (net.head != OutputHead::kLinear) {
    throw Error(ErrorCode::kInvalidArgument, "regression targets need a linear head");
  }
  check_targets(net, batch, targets);
  const auto result = forward(net, batch);
  const double sq = static_cast<double>((result.outputs - targets).squaredNorm());
  return 0.5 * sq / static_cast<double>(batch.rows());
}

template <typename Scalar>
Gradients<Scalar> backward(const BasicDenseNet<Scalar>& net, const MatrixT<Scalar>& batch,
                           std::span<const std::uint32_t> labels,
                           std::span<const double> class_weights) {
  check_labels(net, batch, labels);
  const Trace<Scalar> trace = run(net, batch);
  const auto n = static_cast<Scalar>(batch.rows());
  MatrixT<Scalar> delta = trace.post.back();
  double loss = 0.0;
  for (Eigen::Index i = 0; i < delta.rows(); ++i) {
    const auto w = static_cast<Scalar>(weight_for(class_weights, labels[i]));
    loss += static_cast<double>(w) *
            -std::log(std::max(static_cast<double>(delta(i, labels[i])), 1e-300));
    delta(i, labels[i]) -= Scalar(1);
    delta.row(i) *= w / n;
  }
  Gradients<Scalar> grads = backprop(net, trace, std::move(delta));
  grads.loss = loss / static_cast<double>(n);
  return grads;
}

template <typename Scalar>
Gradients<Scalar> backward(const BasicDenseNet<Scalar>& net, const MatrixT<Scalar>& batch,
                           const MatrixT<Scalar>& targets) {
  if (net.head != OutputHead::kLinear) {
    throw Error(ErrorCode::kInvalidArgument, "regression targets need a linear head");
  }
  check_targets(net, batch, targets);
  const Trace<Scalar> trace = run(net, batch);
  const auto n = static_cast<Scalar>(batch.rows());
  MatrixT<Scalar> residual = trace.post.back() - targets;
  const double loss = 0.5 * static_cast<double>(residual.squaredNorm()) / static_cast<double>(n);
  Gradients<Scalar> grads = backprop(net, trace, residual / n);
  grads.loss = loss;
  return grads;
}

#define ROBOMETER_INSTANTIATE_NN(Scalar)                                                        \
  template BasicDenseNet<Scalar> init_dense_net<Scalar>(const std::vector<std::size_t>&,        \
                                                        OutputHead, std::uint64_t);             \
  template ForwardResult<Scalar> forward<Scalar>(const BasicDenseNet<Scalar>&,                  \
                                                 const MatrixT<Scalar>&);                       \
  template double classification_loss<Scalar>(const BasicDenseNet<Scalar>&,                     \
                                              const MatrixT<Scalar>&,                           \
                                              std::span<const std::uint32_t>,                   \
                                              std::span<const double>);                         \
  template double regression_loss<Scalar>(const BasicDenseNet<Scalar>&, const MatrixT<Scalar>&, \
                                          const MatrixT<Scalar>&);                              \
  template Gradients<Scalar> backward<Scalar>(const BasicDenseNet<Scalar>&,                     \
                                              const MatrixT<Scalar>&,                           \
                                              std::span<const std::uint32_t>,                   \
                                              std::span<const double>);                         \
  template Gradients<Scalar> backward<Scalar>(const BasicDenseNet<Scalar>&,                     \
                                              const MatrixT<Scalar>&, const MatrixT<Scalar>&);

ROBOMETER_INSTANTIATE_NN(float)
ROBOMETER_INSTANTIATE_NN(double)
#undef ROBOMETER_INSTANTIATE_NN

std::size_t argmax(std::span<const float> values) {
  if (values.empty()) throw Error(ErrorCode::kInvalidArgument, "argmax of empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

double f1_score(std::span<const std::uint32_t> truth, std::span<const std::uint32_t> predicted,
                std::size_t num_classes) {
  if (truth.size() != predicted.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "f1 inputs differ in length");
  }
  auto class_f1 = [&](std::uint32_t positive) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      const bool t = truth[i] == positive, p = predicted[i] == positive;
      tp += t && p;
      fp += !t && p;
      fn += t && !p;
    }
    return tp == 0 ? 0.0 : 2 * tp / (2 * tp + fp + fn);
  };
  if (num_classes == 2) return class_f1(1);
  double total = 0.0;
  for (std::uint32_t k = 0; k < num_classes; ++k) total += class_f1(k);
  return total / static_cast<double>(num_classes);
}

namespace {

struct AdamState {
  std::vector<Eigen::MatrixXf> m_w, v_w;
  std::vector<Eigen::VectorXf> m_b, v_b;
  std::size_t step = 0;

  explicit AdamState(const DenseNet& net) {
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
      m_w.push_back(Eigen::MatrixXf::Zero(net.weights[l].rows(), net.weights[l].cols()));
      v_w.push_back(m_w.back());
      m_b.push_back(Eigen::VectorXf::Zero(net.biases[l].size()));
      v_b.push_back(m_b.back());
    }
  }

  void apply(DenseNet& net, const Gradients<float>& g, double lr) {
    constexpr float kBeta1 = 0.9f, kBeta2 = 0.999f, kEps = 1e-8f;
    ++step;
    const float c1 = 1.0f - std::pow(kBeta1, static_cast<float>(step));
    const float c2 = 1.0f - std::pow(kBeta2, static_cast<float>(step));
    const auto rate = static_cast<float>(lr);
    auto update = [&](auto& param, auto& m, auto& v, const auto& grad) {
      m = kBeta1 * m + (1.0f - kBeta1) * grad;
      v = kBeta2 * v + (1.0f - kBeta2) * grad.cwiseAbs2();
      param.array() -= rate * (m.array() / c1) / ((v.array() / c2).sqrt() + kEps);
    };
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
      update(net.weights[l], m_w[l], v_w[l], g.weights[l]);
      update(net.biases[l], m_b[l], v_b[l], g.biases[l]);
    }
  }
};

bool all_finite(const DenseNet& net) {
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    if (!net.weights[l].allFinite() || !net.biases[l].allFinite()) return false;
  }
  return true;
}

std::vector<std::uint32_t> predict_classes(const DenseNet& net, const Eigen::MatrixXf& x) {
  const auto out = forward(net, x).outputs;
  std::vector<std::uint32_t> classes(static_cast<std::size_t>(out.rows()));
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    Eigen::Index best = 0;
    out.row(i).maxCoeff(&best);
    classes[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(best);
  }
  return classes;
}

}  // namespace

DenseNet train(DenseNet net, const TrainingSet& data, const TrainConfig& config,
               TrainReport* report) {
  if (data.size() == 0) throw Error(ErrorCode::kInvalidArgument, "empty training set");
  if (!(config.learning_rate > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "learning_rate must be > 0");
  }
  if (config.batch_size == 0) throw Error(ErrorCode::kInvalidArgument, "batch_size must be >= 1");
  if (static_cast<std::size_t>(data.features.cols()) != net.input_dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "training features do not match input_dim");
  }
  const bool classify = net.head == OutputHead::kSoftmax;
  if (classify && data.labels.size() != data.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "label count differs from feature rows");
  }
  if (!classify && (static_cast<std::size_t>(data.targets.rows()) != data.size() ||
                    static_cast<std::size_t>(data.targets.cols()) != net.output_dim())) {
    throw Error(ErrorCode::kDimensionMismatch, "regression targets shape mismatch");
  }

  TrainReport local;
  TrainReport& rep = report != nullptr ? *report : local;
  rep = TrainReport{};
  if (config.max_epochs == 0) return net;

  RngStream rng(config.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::size_t> train_idx = order, val_idx;
  if (config.validation_fraction > 0.0 && data.size() >= 10) {
    rng.shuffle(order);
    const auto n_val = std::max<std::size_t>(
        1, static_cast<std::size_t>(config.validation_fraction * static_cast<double>(data.size())));
    val_idx.assign(order.end() - static_cast<std::ptrdiff_t>(n_val), order.end());
    train_idx.assign(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_val));
    std::sort(val_idx.begin(), val_idx.end());
    std::sort(train_idx.begin(), train_idx.end());
  }

  std::vector<double> weights = config.class_weights;
  if (classify && weights.empty() && config.balance_classes) {
    std::vector<double> counts(net.output_dim(), 0.0);
    for (std::size_t i : train_idx) counts[data.labels[i]] += 1.0;
    const double n = static_cast<double>(train_idx.size());
    const double k = static_cast<double>(net.output_dim());
    for (double c : counts) weights.push_back(c > 0 ? n / (k * c) : 0.0);
  }
  rep.class_weights = weights;

  auto gather_rows = [&](const Eigen::MatrixXf& m, const std::vector<std::size_t>& idx) {
    Eigen::MatrixXf out(static_cast<Eigen::Index>(idx.size()), m.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) {
      out.row(static_cast<Eigen::Index>(r)) = m.row(static_cast<Eigen::Index>(idx[r]));
    }
    return out;
  };
  auto gather_labels = [&](const std::vector<std::size_t>& idx) {
    std::vector<std::uint32_t> out(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) out[r] = data.labels[idx[r]];
    return out;
  };

  const bool use_val = !val_idx.empty();
  const auto& monitor_idx = use_val ? val_idx : train_idx;
  const Eigen::MatrixXf monitor_x = gather_rows(data.features, monitor_idx);
  const std::vector<std::uint32_t> monitor_y = classify ? gather_labels(monitor_idx)
                                                        : std::vector<std::uint32_t>{};
  const Eigen::MatrixXf monitor_t = classify ? Eigen::MatrixXf() : gather_rows(data.targets, monitor_idx);

  // Validation F1 saturates quickly on easy data; equal F1 then falls back
  // to the lower monitored loss.
  struct Score {
    double primary = -std::numeric_limits<double>::infinity();
    double loss = std::numeric_limits<double>::infinity();
    bool beats(const Score& other) const {
      return primary > other.primary || (primary == other.primary && loss < other.loss);
    }
  };
  auto score = [&](const DenseNet& candidate) {
    Score s;
    if (classify) {
      s.loss = classification_loss(candidate, monitor_x, monitor_y, weights);
      s.primary = use_val ? f1_score(monitor_y, predict_classes(candidate, monitor_x),
                                     candidate.output_dim())
                          : -s.loss;
    } else {
      s.loss = regression_loss(candidate, monitor_x, monitor_t);
      s.primary = -s.loss;
    }
    return s;
  };

  AdamState adam(net);
  DenseNet best = net;
  Score best_score;
  std::size_t since_best = 0;
  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    rng.shuffle(train_idx);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < train_idx.size(); start += config.batch_size) {
      const std::size_t stop = std::min(train_idx.size(), start + config.batch_size);
      const std::vector<std::size_t> idx(train_idx.begin() + static_cast<std::ptrdiff_t>(start),
                                         train_idx.begin() + static_cast<std::ptrdiff_t>(stop));
      const Eigen::MatrixXf x = gather_rows(data.features, idx);
      const std::vector<std::uint32_t> y = classify ? gather_labels(idx) : std::vector<std::uint32_t>{};
      const Gradients<float> g = classify ? backward(net, x, std::span<const std::uint32_t>(y),
                                                     std::span<const double>(weights))
                                          : backward(net, x, gather_rows(data.targets, idx));
      if (!std::isfinite(g.loss)) {
        throw Error(ErrorCode::kNumerical, "non-finite training loss at epoch " +
                                               std::to_string(epoch) + ", batch starting at " +
                                               std::to_string(start));
      }
      epoch_loss += g.loss * static_cast<double>(idx.size());
      adam.apply(net, g, config.learning_rate);
      if (!all_finite(net)) {
        throw Error(ErrorCode::kNumerical,
                    "non-finite parameters after update at epoch " + std::to_string(epoch));
      }
    }
    rep.epoch_losses.push_back(epoch_loss / static_cast<double>(train_idx.size()));
    rep.epochs_run = epoch + 1;

    const Score s = score(net);
    if (s.beats(best_score)) {
      best_score = s;
      best = net;
      rep.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.early_stop_patience && config.early_stop_patience > 0) {
      break;
    }
  }
  rep.best_score = best_score.primary;
  return best;
}

namespace {

constexpr std::array<char, 4> kModelMagic = {'R', 'B', 'N', 'N'};
constexpr std::uint8_t kModelVersion = 1;

std::string head_name(OutputHead head) { return head == OutputHead::kSoftmax ? "softmax" : "linear"; }

OutputHead parse_head(const std::string& name) {
  if (name == "softmax") return OutputHead::kSoftmax;
  if (name == "linear") return OutputHead::kLinear;
  throw Error(ErrorCode::kFormat, "unknown output head: " + name);
}

}  // namespace

void save_model(const DenseNet& net, const std::filesystem::path& path,
                const nlohmann::json& metadata) {
  nlohmann::json header;
  header["format"] = "robometer-densenet";
  header["version"] = kModelVersion;
  header["layer_sizes"] = net.layer_sizes;
  header["head"] = head_name(net.head);
  header["metadata"] = metadata;
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open for writing: " + path.string());
  out.write(kModelMagic.data(), kModelMagic.size());
  out.put(static_cast<char>(kModelVersion));
  const auto len = static_cast<std::uint32_t>(text.size());
  for (int i = 0; i < 4; ++i) out.put(static_cast<char>((len >> (8 * i)) & 0xFF));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    // Stored row-major (out x in).
    const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> w = net.weights[l];
    write_tensorpack(TensorPack::f32({static_cast<std::uint64_t>(w.rows()),
                                      static_cast<std::uint64_t>(w.cols())},
                                     std::vector<float>(w.data(), w.data() + w.size())),
                     out);
    const auto& b = net.biases[l];
    write_tensorpack(TensorPack::f32({static_cast<std::uint64_t>(b.size())},
                                     std::vector<float>(b.data(), b.data() + b.size())),
                     out);
  }
  if (!out) throw Error(ErrorCode::kIo, "model write failed: " + path.string());
}

DenseNet load_model(const std::filesystem::path& path, nlohmann::json* metadata) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open model: " + path.string());
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (in.gcount() != 4) throw Error(ErrorCode::kTruncated, "model file truncated");
  if (magic != kModelMagic) throw Error(ErrorCode::kBadMagic, "not a model file: " + path.string());
  const int version = in.get();
  if (version != kModelVersion) {
    throw Error(ErrorCode::kFormat, "unsupported model version " + std::to_string(version));
  }
  std::uint32_t len = 0;
  for (int i = 0; i < 4; ++i) {
    const int byte = in.get();
    if (byte < 0) throw Error(ErrorCode::kTruncated, "model header truncated");
    len |= static_cast<std::uint32_t>(byte) << (8 * i);
  }
  std::string text(len, '\0');
  in.read(text.data(), len);
  if (static_cast<std::uint32_t>(in.gcount()) != len) {
    throw Error(ErrorCode::kTruncated, "model header truncated");
  }

  DenseNet net;
  try {
    const auto header = nlohmann::json::parse(text);
    net.layer_sizes = header.at("layer_sizes").get<std::vector<std::size_t>>();
    net.head = parse_head(header.at("head").get<std::string>());
    if (metadata != nullptr) *metadata = header.value("metadata", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("model header: ") + e.what());
  }
  if (net.layer_sizes.size() < 2) throw Error(ErrorCode::kFormat, "model has fewer than 2 layers");

  for (std::size_t l = 0; l + 1 < net.layer_sizes.size(); ++l) {
    const std::uint64_t rows = net.layer_sizes[l + 1], cols = net.layer_sizes[l];
    const TensorPack w = read_tensorpack(in);
    if (w.dims() != std::vector<std::uint64_t>{rows, cols}) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "weight " + std::to_string(l) + " shape disagrees with header");
    }
    const TensorPack b = read_tensorpack(in);
    if (b.dims() != std::vector<std::uint64_t>{rows}) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "bias " + std::to_string(l) + " shape disagrees with header");
    }
    const auto wv = w.f32_values();
    net.weights.push_back(Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic,
                                                         Eigen::RowMajor>>(
        wv.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)));
    const auto bv = b.f32_values();
    net.biases.push_back(Eigen::Map<const Eigen::VectorXf>(bv.data(), static_cast<Eigen::Index>(rows)));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw Error(ErrorCode::kDimensionMismatch, "model payload has trailing tensors");
  }
  return net;
}

}  // namespace robometer
