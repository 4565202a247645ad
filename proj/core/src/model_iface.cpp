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

#include "robometer/model_iface.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <thread>

#include "robometer/error.hpp"
#include "robometer/wire_protocol.hpp"

namespace robometer {

void validate_model_info(const ModelInfo& info) {
  if (info.task == Task::kClassification && info.num_classes < 2) {
    throw Error(ErrorCode::kProtocol, "classification model must declare num_classes >= 2");
  }
  if (info.input_dims.size() == 0) throw Error(ErrorCode::kProtocol, "model input_dims are empty");
}

std::size_t Prediction::top1() const { return argmax(outputs); }

double top1_confidence(std::span<const float> outputs) {
  if (outputs.empty()) return 0.0;
  double sum = 0.0;
  bool non_negative = true;
  for (float v : outputs) {
    sum += v;
    non_negative = non_negative && v >= 0.0f;
  }
  if (non_negative && std::abs(sum - 1.0) <= 1e-3) {
    double best = 0.0;
    for (float v : outputs) best = std::max(best, static_cast<double>(v));
    return std::min(best, 1.0);
  }
  double peak = outputs[0];
  for (float v : outputs) peak = std::max(peak, static_cast<double>(v));
  double z = 0.0;
  for (float v : outputs) z += std::exp(static_cast<double>(v) - peak);
  return 1.0 / z;
}

Eigen::MatrixXf flatten_images(std::span<const Image> images) {
  if (images.empty()) return {};
  const std::size_t d = images.front().dims.size();
  Eigen::MatrixXf out(static_cast<Eigen::Index>(images.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].pixels.size() != d) {
      throw Error(ErrorCode::kDimensionMismatch, "batch images differ in size");
    }
    out.row(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Eigen::RowVectorXf>(images[i].pixels.data(), static_cast<Eigen::Index>(d));
  }
  return out;
}

namespace {

void check_batch_dims(std::span<const Image> images, const ImageDims& expected) {
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].dims != expected) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "image " + std::to_string(i) + " does not match model input dims");
    }
  }
}

}  // namespace

BuiltinModel::BuiltinModel(DenseNet net, ImageDims input_dims, std::string name)
    : net_(std::move(net)) {
  if (input_dims.size() != net_.input_dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "model input_dim does not match image dims");
  }
  info_.name = std::move(name);
  info_.task = net_.head == OutputHead::kSoftmax ? Task::kClassification : Task::kRegression;
  info_.num_classes = info_.task == Task::kClassification ? net_.output_dim() : 0;
  info_.feature_dim = net_.penultimate_dim();
  info_.input_dims = input_dims;
  validate_model_info(info_);
}

std::vector<Prediction> BuiltinModel::predict_batch(std::span<const Image> images,
                                                    bool want_features) {
  if (images.empty()) return {};
  check_batch_dims(images, info_.input_dims);
  std::vector<Prediction> predictions(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    // One row at a time: matrix-matrix products round differently from
    // matrix-vector ones, and results must not depend on batch composition.
    const auto result = forward(net_, flatten_images(images.subspan(i, 1)));
    const Eigen::Index row = 0;
    auto& p = predictions[i];
    p.outputs.resize(static_cast<std::size_t>(result.outputs.cols()));
    for (Eigen::Index k = 0; k < result.outputs.cols(); ++k) p.outputs[k] = result.outputs(row, k);
    if (info_.task == Task::kClassification) p.top1_confidence = top1_confidence(p.outputs);
    if (want_features) {
      std::vector<float> f(static_cast<std::size_t>(result.penultimate.cols()));
      for (Eigen::Index k = 0; k < result.penultimate.cols(); ++k) f[k] = result.penultimate(row, k);
      p.features = std::move(f);
    }
  }
  return predictions;
}

namespace {

std::once_flag sigpipe_once;

using Clock = std::chrono::steady_clock;

int remaining_ms(Clock::time_point deadline) {
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
  return static_cast<int>(std::max<std::int64_t>(0, left.count()));
}

}  // namespace

SubprocessModel::SubprocessModel(const std::string& command, SubprocessOptions options)
    : options_(options) {
  if (options_.max_batch == 0) throw Error(ErrorCode::kInvalidArgument, "max_batch must be >= 1");
  std::call_once(sigpipe_once, [] { ::signal(SIGPIPE, SIG_IGN); });
  int in_pipe[2], out_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0) throw Error(ErrorCode::kIo, "pipe failed");
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw Error(ErrorCode::kIo, "pipe failed");
  }
  const pid_t pid = ::fork();
  if (pid < 0) throw Error(ErrorCode::kIo, "fork failed");
  if (pid == 0) {
    // Own process group, so a kill also reaches whatever the shell spawned.
    ::setpgid(0, 0);
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::setpgid(pid, pid);
  pid_ = pid;
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];

  try {
    info_ = wire::parse_hello_reply(exchange(wire::encode_hello_request()));
  } catch (...) {
    terminate_child();
    throw;
  }
}

SubprocessModel::~SubprocessModel() {
  if (to_child_ >= 0) {
    ::close(to_child_);
    to_child_ = -1;
  }
  if (pid_ > 0) {
    // Give the child a moment to exit on EOF before killing it.
    for (int i = 0; i < 50; ++i) {
      int status = 0;
      if (::waitpid(pid_, &status, WNOHANG) == pid_) {
        pid_ = -1;
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
  }
  terminate_child();
}

void SubprocessModel::terminate_child() {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  to_child_ = from_child_ = -1;
  if (pid_ > 0) {
    ::kill(-pid_, SIGKILL);
    int status = 0;
    ::waitpid(pid_, &status, 0);
    pid_ = -1;
  }
}

std::string SubprocessModel::exchange(const std::string& request) {
  if (pid_ <= 0 || to_child_ < 0) {
    throw Error(ErrorCode::kAdapter, "model process is not running");
  }
  const auto deadline = Clock::now() + options_.timeout;
  auto timed_out = [&]() {
    terminate_child();
    return Error(ErrorCode::kTimeout, "model process did not answer within " +
                                          std::to_string(options_.timeout.count()) + " ms");
  };

  const std::string framed = request + "\n";
  std::size_t written = 0;
  while (written < framed.size()) {
    pollfd pfd{to_child_, POLLOUT, 0};
    const int ready = ::poll(&pfd, 1, remaining_ms(deadline));
    if (ready == 0) throw timed_out();
    if (ready < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::kIo, "poll failed");
    }
    const ssize_t n = ::write(to_child_, framed.data() + written, framed.size() - written);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      terminate_child();
      throw Error(ErrorCode::kAdapter, "model process closed its input");
    }
    written += static_cast<std::size_t>(n);
  }

  while (true) {
    const auto newline = buffer_.find('\n');
    if (newline != std::string::npos) {
      std::string line = buffer_.substr(0, newline);
      buffer_.erase(0, newline + 1);
      return line;
    }
    pollfd pfd{from_child_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, remaining_ms(deadline));
    if (ready == 0) throw timed_out();
    if (ready < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::kIo, "poll failed");
    }
    char chunk[65536];
    const ssize_t n = ::read(from_child_, chunk, sizeof(chunk));
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      throw Error(ErrorCode::kIo, "read from model process failed");
    }
    if (n == 0) {
      terminate_child();
      throw Error(ErrorCode::kAdapter, "model process exited before replying");
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

std::vector<Prediction> SubprocessModel::predict_batch(std::span<const Image> images,
                                                       bool want_features) {
  if (images.empty()) return {};
  check_batch_dims(images, info_.input_dims);
  std::lock_guard lock(mutex_);
  std::vector<Prediction> predictions;
  predictions.reserve(images.size());
  for (std::size_t start = 0; start < images.size(); start += options_.max_batch) {
    const auto chunk = images.subspan(start, std::min(options_.max_batch, images.size() - start));
    const std::int64_t id = next_id_++;
    try {
      auto part = wire::parse_predict_reply(
          exchange(wire::encode_predict_request(id, chunk, want_features)), id, chunk.size(),
          info_, want_features);
      for (auto& p : part) predictions.push_back(std::move(p));
    } catch (const Error& e) {
      throw Error(e.code(), "batch starting at index " + std::to_string(start) + ": " + e.what());
    }
  }
  return predictions;
}

std::unique_ptr<ModelUnderTest> open_model(const std::string& source,
                                           const ModelOpenOptions& options) {
  constexpr std::string_view kExec = "exec:";
  if (source.rfind(kExec, 0) == 0) {
    return std::make_unique<SubprocessModel>(source.substr(kExec.size()), options.subprocess);
  }
  if (!std::filesystem::exists(source)) {
    throw Error(ErrorCode::kMissingArtifact, "model file not found: " + source);
  }
  nlohmann::json metadata;
  DenseNet net = load_model(source, &metadata);
  ImageDims dims;
  try {
    const auto& d = metadata.at("input_dims");
    dims = {d.at(0).get<std::size_t>(), d.at(1).get<std::size_t>(), d.at(2).get<std::size_t>()};
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::kFormat, "model file lacks input_dims metadata: " + source);
  }
  return std::make_unique<BuiltinModel>(std::move(net), dims,
                                        metadata.value("name", std::string("builtin")));
}

void save_builtin_model(const DenseNet& net, const ImageDims& input_dims, const std::string& name,
                        const std::filesystem::path& path, Task task) {
  nlohmann::json metadata = {
      {"name", name},
      {"task", task_name(task)},
      {"input_dims", {input_dims.height, input_dims.width, input_dims.channels}},
  };
  save_model(net, path, metadata);
}

}  // namespace robometer
