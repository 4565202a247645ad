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

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "robometer/error.hpp"
#include "robometer/wire_protocol.hpp"
#include "test_support.hpp"

namespace robometer {
namespace {

using testing::fixture_path;
using testing::random_image;
using testing::read_file;
using testing::TempDir;

std::string stub(const std::string& args = "") {
  return std::string("exec:") + ROBOMETER_STUB_MODEL + (args.empty() ? "" : " " + args);
}

ErrorCode error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::kInvalidArgument;
}

// Independent statement of the stub's rule: class floor(mean * K).
std::size_t rule_class(const Image& image, std::size_t k) {
  double mean = 0.0;
  for (float p : image.pixels) mean += p;
  mean /= static_cast<double>(image.pixels.size());
  return std::min(k - 1, static_cast<std::size_t>(std::floor(mean * static_cast<double>(k))));
}

BuiltinModel make_builtin(std::uint64_t seed = 1) {
  return BuiltinModel(init_dense_net<float>({12, 9, 5, 3}, OutputHead::kSoftmax, seed), {2, 2, 3}, "tiny");
}

TEST(BuiltinModelTest, HandshakeReportsPenultimateWidth) {
  BuiltinModel model = make_builtin();
  const ModelInfo& info = handshake(model);
  EXPECT_EQ(info.task, Task::kClassification);
  EXPECT_EQ(info.num_classes, 3u);
  EXPECT_EQ(info.feature_dim, 5u);
  EXPECT_EQ(info.name, "tiny");
}

TEST(BuiltinModelTest, EmptyBatch) {
  BuiltinModel model = make_builtin();
  EXPECT_TRUE(model.predict_batch({}, true).empty());
}

TEST(BuiltinModelTest, MatchesDirectForward) {
  BuiltinModel model = make_builtin();
  RngStream rng(3);
  std::vector<Image> images;
  for (int i = 0; i < 7; ++i) images.push_back(random_image({2, 2, 3}, rng));
  const auto predictions = model.predict_batch(images, true);
  const auto direct = forward(model.net(), flatten_images(images));
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    for (std::size_t k = 0; k < 3; ++k) {
      EXPECT_NEAR(predictions[i].outputs[k], direct.outputs(row, static_cast<Eigen::Index>(k)), 1e-6);
    }
    EXPECT_NEAR(predictions[i].top1_confidence, direct.outputs.row(row).maxCoeff(), 1e-6);
    ASSERT_TRUE(predictions[i].features.has_value());
    EXPECT_EQ(predictions[i].features->size(), 5u);
  }
  EXPECT_FALSE(model.predict_batch(images, false)[0].features.has_value());
}

TEST(BuiltinModelTest, BatchSplitInvariance) {
  BuiltinModel model = make_builtin(4);
  RngStream rng(5);
  std::vector<Image> images;
  for (int i = 0; i < 10; ++i) images.push_back(random_image({2, 2, 3}, rng));
  const auto whole = model.predict_batch(images, true);
  auto a = model.predict_batch(std::span(images).first(4), true);
  const auto b = model.predict_batch(std::span(images).subspan(4), true);
  a.insert(a.end(), b.begin(), b.end());
  EXPECT_EQ(whole, a);
  EXPECT_EQ(whole, model.predict_batch(images, true));
}

TEST(BuiltinModelTest, DimensionMismatch) {
  BuiltinModel model = make_builtin();
  const std::vector<Image> wrong = {Image({3, 3, 1}, 0.5f)};
  EXPECT_EQ(error_of([&] { model.predict_batch(wrong, false); }), ErrorCode::kDimensionMismatch);
}

TEST(BuiltinModelTest, FileRoundTripThroughOpenModel) {
  TempDir dir;
  BuiltinModel original = make_builtin(6);
  save_builtin_model(original.net(), {2, 2, 3}, "saved", dir / "m.rbnn", Task::kClassification);
  auto loaded = open_model((dir / "m.rbnn").string());
  EXPECT_EQ(loaded->info().name, "saved");
  RngStream rng(2);
  const std::vector<Image> images = {random_image({2, 2, 3}, rng)};
  EXPECT_EQ(loaded->predict_batch(images, true), original.predict_batch(images, true));
}

TEST(OpenModelTest, MissingFile) {
  EXPECT_EQ(error_of([] { open_model("/nonexistent/model.rbnn"); }), ErrorCode::kMissingArtifact);
}

TEST(SubprocessModelTest, HandshakeAndRuleOracle) {
  auto model = open_model(stub("--classes 5 --dims 3,3,2"));
  const ModelInfo& info = handshake(*model);
  EXPECT_EQ(info.name, "stub-rule");
  EXPECT_EQ(info.num_classes, 5u);
  EXPECT_EQ(info.input_dims, (ImageDims{3, 3, 2}));
  EXPECT_EQ(info.feature_dim, 2u);

  RngStream rng(8);
  std::vector<Image> images;
  for (int i = 0; i < 10; ++i) {
    Image image = random_image({3, 3, 2}, rng);
    const auto scale = static_cast<float>(rng.uniform(0.1, 1.0));
    for (float& p : image.pixels) p *= scale;
    images.push_back(image);
  }
  const auto predictions = model->predict_batch(images, true);
  ASSERT_EQ(predictions.size(), 10u);
  for (std::size_t i = 0; i < images.size(); ++i) {
    EXPECT_EQ(predictions[i].top1(), rule_class(images[i], 5)) << i;
    ASSERT_TRUE(predictions[i].features.has_value());
  }
}

TEST(SubprocessModelTest, LargeBatchesAreChunked) {
  SubprocessOptions options;
  options.max_batch = 7;
  SubprocessModel model(std::string(ROBOMETER_STUB_MODEL), options);
  RngStream rng(9);
  std::vector<Image> images;
  for (int i = 0; i < 50; ++i) images.push_back(random_image({4, 4, 1}, rng));
  const auto chunked = model.predict_batch(images, false);
  auto whole = open_model(stub());
  EXPECT_EQ(chunked, whole->predict_batch(images, false));
  EXPECT_TRUE(model.predict_batch({}, false).empty());
}

TEST(SubprocessModelTest, MissingTaskIsProtocolError) {
  EXPECT_EQ(error_of([] { open_model(stub("--mode missing-task")); }), ErrorCode::kProtocol);
}

TEST(SubprocessModelTest, TimeoutKillsChild) {
  ModelOpenOptions options;
  options.subprocess.timeout = std::chrono::milliseconds(300);
  auto model = open_model(stub("--mode sleep"), options);
  const std::vector<Image> images = {Image({4, 4, 1}, 0.5f)};
  EXPECT_EQ(error_of([&] { model->predict_batch(images, false); }), ErrorCode::kTimeout);
  // The child is gone; later calls fail fast instead of hanging.
  EXPECT_EQ(error_of([&] { model->predict_batch(images, false); }), ErrorCode::kAdapter);
}

TEST(SubprocessModelTest, FailureModes) {
  const std::vector<Image> images = {Image({4, 4, 1}, 0.5f)};
  auto error_model = open_model(stub("--mode error"));
  EXPECT_EQ(error_of([&] { error_model->predict_batch(images, false); }), ErrorCode::kAdapter);
  auto garbage = open_model(stub("--mode garbage"));
  EXPECT_EQ(error_of([&] { garbage->predict_batch(images, false); }), ErrorCode::kProtocol);
  auto wrong_id = open_model(stub("--mode wrong-id"));
  EXPECT_EQ(error_of([&] { wrong_id->predict_batch(images, false); }), ErrorCode::kProtocol);
  auto crash = open_model(stub("--mode crash"));
  EXPECT_EQ(error_of([&] { crash->predict_batch(images, false); }), ErrorCode::kAdapter);
  EXPECT_EQ(error_of([] { open_model("exec:/bin/false"); }), ErrorCode::kAdapter);
}

TEST(SubprocessModelTest, BlackBoxStubHasNoFeatures) {
  auto model = open_model(stub("--no-features"));
  EXPECT_FALSE(model->info().feature_dim.has_value());
  const std::vector<Image> images = {Image({4, 4, 1}, 0.5f)};
  EXPECT_FALSE(model->predict_batch(images, true)[0].features.has_value());
}

TEST(SubprocessModelTest, StubReplaysGoldenTranscript) {
  TempDir dir;
  const std::string command = std::string(ROBOMETER_STUB_MODEL) + " < " +
                              fixture_path("transcript_requests.ndjson").string() + " > " +
                              (dir / "replies.ndjson").string();
  ASSERT_EQ(std::system(command.c_str()), 0);
  EXPECT_EQ(read_file(dir / "replies.ndjson"), read_file(fixture_path("transcript_replies.ndjson")));
}

}  // namespace
}  // namespace robometer
