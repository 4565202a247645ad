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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "robometer/error.hpp"
#include "test_support.hpp"

namespace robometer {
namespace {

using testing::TempDir;

template <typename Fn>
std::optional<ErrorCode> code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

RobustnessProfile profile_from(const std::vector<double>& accuracies,
                               const std::vector<double>& lambdas) {
  RobustnessProfile profile;
  profile.num_classes = 4;
  for (std::size_t i = 0; i < accuracies.size(); ++i) {
    PointProfile p;
    p.index = i;
    p.label = 0;
    p.neighbor_accuracy = accuracies[i];
    p.diversity_lambda = lambdas[i];
    profile.points.push_back(p);
  }
  return profile;
}

// Accuracy on the grid of m = 50 and a lambda that loosely tracks it.
RobustnessProfile random_profile(std::size_t n, RngStream& rng) {
  std::vector<double> acc, lam;
  for (std::size_t i = 0; i < n; ++i) {
    acc.push_back(static_cast<double>(rng.below(52)) / 51.0);
    lam.push_back(std::clamp(acc.back() + 0.3 * rng.normal(), 0.25, 1.0));
  }
  return profile_from(acc, lam);
}

double f1_oracle(std::size_t tp, std::size_t detected, std::size_t truth) {
  if (tp == 0) return 0.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(detected + truth);
}

FeatureMatrix matrix(const std::vector<std::vector<float>>& rows) {
  FeatureMatrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
  return m;
}

// Two well separated blobs in 3-D; weak points are the ones with x > 0.
void separable_set(std::size_t n, RngStream& rng, FeatureMatrix& features, std::vector<bool>& weak) {
  features = FeatureMatrix(n, 3);
  weak.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    weak[i] = i % 3 == 0;
    const double cx = weak[i] ? 3.0 : -3.0;
    features.row(i)[0] = static_cast<float>(cx + 0.5 * rng.normal());
    features.row(i)[1] = static_cast<float>(rng.normal());
    features.row(i)[2] = static_cast<float>(5.0 + 2.0 * rng.normal());
  }
}

TrainConfig quick_w_config(std::uint64_t seed) {
  TrainConfig config = default_w_train_config(seed);
  config.max_epochs = 40;
  config.batch_size = 32;
  config.learning_rate = 1e-2;
  return config;
}

std::string stub_blend() {
  return std::string(ROBOMETER_STUB_MODEL) + " --mode blend";
}

TEST(CalibrateBTest, MaxOverWeakPoints) {
  const auto profile = profile_from({0.5, 0.6, 0.9}, {0.4, 0.6, 0.9});
  const auto t = calibrate_b(profile, 0.75, 30);
  EXPECT_EQ(t.lambda_threshold, 0.6);
  EXPECT_EQ(t.cutoff_used, 0.75);
  EXPECT_EQ(t.m_b, 30u);
  EXPECT_FALSE(t.no_weak_points);
  EXPECT_EQ(t.calibration_points, 3u);
  EXPECT_EQ(t.calibration_digest.size(), 16u);
}

TEST(CalibrateBTest, NoWeakPointsMeansEverythingStrong) {
  const auto profile = profile_from({0.9, 1.0}, {0.3, 1.0});
  const auto t = calibrate_b(profile, 0.75);
  EXPECT_EQ(t.lambda_threshold, 0.0);
  EXPECT_TRUE(t.no_weak_points);
  for (double lambda : {0.25, 0.5, 1.0}) EXPECT_EQ(classify_lambda(lambda, t), Verdict::kStrong);
}

TEST(CalibrateBTest, CalibrationRecallIsOne) {
  RngStream rng(1000);
  for (int trial = 0; trial < 10; ++trial) {
    const auto profile = random_profile(1000, rng);
    for (double cutoff : {0.5, 0.75}) {
      const auto t = calibrate_b(profile, cutoff);
      std::size_t weak = 0, caught = 0;
      for (const auto& p : profile.points) {
        if (p.neighbor_accuracy < cutoff) {
          ++weak;
          caught += classify_lambda(*p.diversity_lambda, t) == Verdict::kWeak;
        }
      }
      ASSERT_GT(weak, 0u);
      EXPECT_EQ(caught, weak);
    }
  }
}

TEST(CalibrateBTest, SubsetOfIndices) {
  const auto profile = profile_from({0.1, 0.2, 0.3, 0.9}, {0.95, 0.4, 0.5, 1.0});
  const std::vector<std::size_t> subset = {1, 2, 3};
  const auto t = calibrate_b(profile, 0.75, 50, subset);
  EXPECT_EQ(t.lambda_threshold, 0.5);
  EXPECT_EQ(t.calibration_points, 3u);
  EXPECT_NE(t.calibration_digest, calibrate_b(profile, 0.75).calibration_digest);
  const std::vector<std::size_t> bad = {7};
  EXPECT_EQ(code_of([&] { calibrate_b(profile, 0.75, 50, bad); }), ErrorCode::kInvalidArgument);
}

TEST(CalibrateBTest, RejectsRegressionProfiles) {
  auto profile = profile_from({0.1}, {0.5});
  profile.task = Task::kRegression;
  EXPECT_EQ(code_of([&] { calibrate_b(profile, 0.75); }), ErrorCode::kInvalidArgument);
  profile.task = Task::kClassification;
  profile.points[0].diversity_lambda.reset();
  EXPECT_EQ(code_of([&] { calibrate_b(profile, 0.75); }), ErrorCode::kInvalidArgument);
}

TEST(CalibrateBTest, JsonRoundTrip) {
  const auto t = calibrate_b(profile_from({0.2, 0.9}, {0.52, 1.0}), 0.5, 20);
  const auto back = bthreshold_from_json(nlohmann::json::parse(bthreshold_to_json(t).dump()));
  EXPECT_EQ(back.lambda_threshold, t.lambda_threshold);
  EXPECT_EQ(back.cutoff_used, t.cutoff_used);
  EXPECT_EQ(back.m_b, t.m_b);
  EXPECT_EQ(back.calibration_digest, t.calibration_digest);
  auto doc = nlohmann::json::parse(bthreshold_to_json(t).dump());
  doc["kind"] = "wmodel";
  EXPECT_EQ(code_of([&] { bthreshold_from_json(doc); }), ErrorCode::kFormat);
  doc["kind"] = "bthreshold";
  doc["lambda_threshold"] = 1.5;
  EXPECT_EQ(code_of([&] { bthreshold_from_json(doc); }), ErrorCode::kFormat);
}

TEST(ClassifyLambdaTest, StrictAndMonotone) {
  BThreshold t;
  t.lambda_threshold = 0.36;
  EXPECT_EQ(classify_lambda(0.36, t), Verdict::kWeak);
  EXPECT_EQ(classify_lambda(0.37, t), Verdict::kStrong);
  t.lambda_threshold = 0.99;
  EXPECT_EQ(classify_lambda(1.0, t), Verdict::kStrong);

  RngStream rng(6);
  std::vector<double> lambdas(300);
  for (auto& l : lambdas) l = rng.uniform(0.25, 1.0);
  std::set<std::size_t> previous;
  for (int step = 0; step <= 20; ++step) {
    t.lambda_threshold = step / 20.0;
    std::set<std::size_t> weak;
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
      if (classify_lambda(lambdas[i], t) == Verdict::kWeak) weak.insert(i);
    }
    EXPECT_TRUE(std::includes(weak.begin(), weak.end(), previous.begin(), previous.end()));
    previous = std::move(weak);
  }
}

TEST(DetectBTest, StubBlendModel) {
  SubprocessModel model(stub_blend());
  BThreshold t;
  t.lambda_threshold = 0.6;
  t.m_b = 20;
  const Image pure(ImageDims{4, 4, 1}, 1.0f);
  const Image blended(ImageDims{4, 4, 1}, 0.5f);
  RngStream rng(3);
  const auto strong = detect_b(model, pure, t, rng);
  EXPECT_EQ(strong.verdict, Verdict::kStrong);
  EXPECT_EQ(strong.lambda, 1.0);
  const auto weak = detect_b(model, blended, t, rng);
  EXPECT_EQ(weak.verdict, Verdict::kWeak);
  // 21 predictions cycling through 4 classes: counts {6, 5, 5, 5}.
  EXPECT_NEAR(weak.lambda, (36.0 + 3 * 25.0) / 441.0, 1e-12);
}

TEST(DetectBTest, AgreeingPredictionsAreStrong) {
  auto net = init_dense_net<float>({4, 3, 2}, OutputHead::kSoftmax, 0);
  for (auto& w : net.weights) w.setZero();
  for (auto& b : net.biases) b.setZero();
  net.biases.back()[1] = 1.0f;
  BuiltinModel model(std::move(net), {2, 2, 1});
  BThreshold t;
  t.lambda_threshold = 0.999;
  t.m_b = 10;
  RngStream rng(4);
  const auto d = detect_b(model, Image(ImageDims{2, 2, 1}, 0.3f), t, rng);
  EXPECT_EQ(d.lambda, 1.0);
  EXPECT_EQ(d.verdict, Verdict::kStrong);
}

TEST(TrainWTest, SeparableSetIsLearned) {
  RngStream rng(8);
  FeatureMatrix features;
  std::vector<bool> weak;
  separable_set(240, rng, features, weak);
  const auto model = train_w(features, weak, quick_w_config(1));
  EXPECT_EQ(model.net.layer_sizes, (std::vector<std::size_t>{3, 256, 128, 64, 2}));
  std::vector<std::uint32_t> truth, predicted;
  for (std::size_t i = 0; i < features.rows; ++i) {
    truth.push_back(weak[i]);
    predicted.push_back(detect_w(model, features.row(i)).verdict == Verdict::kWeak);
  }
  EXPECT_GE(f1_score(truth, predicted, 2), 0.95);
}

TEST(TrainWTest, DeterministicPerSeed) {
  RngStream rng(9);
  FeatureMatrix features;
  std::vector<bool> weak;
  separable_set(90, rng, features, weak);
  const auto a = train_w(features, weak, quick_w_config(5), {3, 16, 8, 4, 2});
  const auto b = train_w(features, weak, quick_w_config(5), {3, 16, 8, 4, 2});
  for (std::size_t l = 0; l < a.net.num_layers(); ++l) {
    EXPECT_EQ(a.net.weights[l], b.net.weights[l]);
    EXPECT_EQ(a.net.biases[l], b.net.biases[l]);
  }
  EXPECT_EQ(a.feature_mean, b.feature_mean);
}

TEST(TrainWTest, FlippedLabelsFlipDecisions) {
  RngStream rng(10);
  FeatureMatrix features, held_out;
  std::vector<bool> weak, held_weak;
  separable_set(150, rng, features, weak);
  separable_set(60, rng, held_out, held_weak);
  std::vector<bool> flipped(weak.size());
  for (std::size_t i = 0; i < weak.size(); ++i) flipped[i] = !weak[i];
  const auto model = train_w(features, weak, quick_w_config(2), {3, 16, 8, 4, 2});
  const auto inverse = train_w(features, flipped, quick_w_config(2), {3, 16, 8, 4, 2});
  std::size_t agree = 0;
  for (std::size_t i = 0; i < held_out.rows; ++i) {
    const bool a = detect_w(model, held_out.row(i)).verdict == Verdict::kWeak;
    const bool b = detect_w(inverse, held_out.row(i)).verdict == Verdict::kWeak;
    EXPECT_EQ(a, held_weak[i]);
    agree += a != b;
  }
  EXPECT_EQ(agree, held_out.rows);
}

TEST(TrainWTest, Errors) {
  const auto features = matrix({{0, 1}, {1, 0}, {2, 2}});
  EXPECT_EQ(code_of([&] { train_w(features, {true, true, true}, quick_w_config(0)); }),
            ErrorCode::kInsufficientData);
  EXPECT_EQ(code_of([&] { train_w(features, {true, false}, quick_w_config(0)); }),
            ErrorCode::kDimensionMismatch);
  EXPECT_EQ(code_of([&] { train_w(features, {true, false, true}, quick_w_config(0), {2, 4, 3}); }),
            ErrorCode::kInvalidArgument);
}

TEST(DetectWTest, ZeroWeightsGiveOneHalfAndWeak) {
  WModel model;
  model.net = init_dense_net<float>(default_w_layers(5), OutputHead::kSoftmax, 0);
  for (auto& w : model.net.weights) w.setZero();
  const std::vector<float> feature = {1, -2, 3, 0.5f, 9};
  const auto d = detect_w(model, feature);
  EXPECT_EQ(d.weak_probability, 0.5);
  EXPECT_EQ(d.verdict, Verdict::kWeak);
  const std::vector<float> wrong = {1, 2};
  EXPECT_EQ(code_of([&] { detect_w(model, wrong); }), ErrorCode::kDimensionMismatch);
}

TEST(DetectWTest, MatchesDirectForward) {
  RngStream rng(12);
  WModel model;
  model.net = init_dense_net<float>({6, 10, 8, 4, 2}, OutputHead::kSoftmax, 77);
  for (int i = 0; i < 6; ++i) {
    model.feature_mean.push_back(static_cast<float>(rng.normal()));
    model.feature_scale.push_back(static_cast<float>(rng.uniform(0.5, 2.0)));
  }
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<float> f(6);
    Eigen::MatrixXf x(1, 6);
    for (int d = 0; d < 6; ++d) {
      f[d] = static_cast<float>(3.0 * rng.normal());
      x(0, d) = (f[d] - model.feature_mean[d]) * model.feature_scale[d];
    }
    const auto out = forward(model.net, x).outputs;
    const auto d = detect_w(model, f);
    EXPECT_EQ(d.weak_probability, out(0, 1));
    EXPECT_EQ(d.verdict == Verdict::kWeak, out(0, 1) >= 0.5f);
    EXPECT_EQ(detect_w(model, f).weak_probability, d.weak_probability);
  }
}

TEST(DetectWTest, FileRoundTrip) {
  TempDir dir;
  RngStream rng(13);
  FeatureMatrix features;
  std::vector<bool> weak;
  separable_set(60, rng, features, weak);
  const auto model = train_w(features, weak, quick_w_config(3), {3, 8, 6, 4, 2});
  save_wmodel(model, dir / "w.rbnn");
  const auto back = load_wmodel(dir / "w.rbnn");
  EXPECT_EQ(back.feature_mean, model.feature_mean);
  EXPECT_EQ(back.feature_scale, model.feature_scale);
  for (std::size_t i = 0; i < features.rows; ++i) {
    EXPECT_EQ(detect_w(back, features.row(i)).weak_probability,
              detect_w(model, features.row(i)).weak_probability);
  }
}

TEST(BaselineRandomTest, SizesAndErrors) {
  RngStream rng(1);
  EXPECT_EQ(baseline_random(5, 5, rng), (std::vector<std::size_t>{0, 1, 2, 3, 4}));
  EXPECT_TRUE(baseline_random(0, 5, rng).empty());
  EXPECT_EQ(code_of([&] { baseline_random(6, 5, rng); }), ErrorCode::kInvalidArgument);
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = baseline_random(17, 40, rng);
    EXPECT_EQ(s.size(), 17u);
    EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));
    EXPECT_EQ(std::set<std::size_t>(s.begin(), s.end()).size(), 17u);
    EXPECT_LT(s.back(), 40u);
  }
}

TEST(BaselineRandomTest, ExpectedRecallMatchesSamplingRate) {
  RngStream rng(2);
  const std::vector<std::size_t> truth = {1, 4, 9, 16, 25, 36, 49, 64, 81};
  double recall = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    recall += evaluate(baseline_random(30, 100, rng), truth, 100).recall;
  }
  EXPECT_NEAR(recall / 1000.0, 0.3, 0.03);
}

TEST(BaselineTop1Test, StrictCutoff) {
  const std::vector<double> conf = {0.2, 0.5, 0.99, 1.0};
  EXPECT_TRUE(baseline_top1(conf, 0.0).empty());
  EXPECT_EQ(baseline_top1(conf, 1.0), (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(baseline_top1(conf, 0.5), (std::vector<std::size_t>{0}));
}

TEST(BaselineTop1Test, GridSearchMatchesExhaustiveOracle) {
  RngStream rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 20 + rng.below(60);
    std::vector<double> conf(n);
    std::vector<bool> weak(n);
    for (std::size_t i = 0; i < n; ++i) {
      weak[i] = rng.below(3) == 0;
      // Coarse values produce plenty of tied F1 scores across the grid.
      conf[i] = std::round((weak[i] ? rng.uniform(0.2, 0.8) : rng.uniform(0.5, 1.0)) * 10.0) / 10.0;
    }
    double best = -1, best_cutoff = 0;
    for (int step = 1; step <= 19; ++step) {
      const double c = 0.05 * step;
      std::size_t tp = 0, detected = 0, truth = 0;
      for (std::size_t i = 0; i < n; ++i) {
        detected += conf[i] < c;
        truth += weak[i];
        tp += conf[i] < c && weak[i];
      }
      const double f1 = f1_oracle(tp, detected, truth);
      if (f1 > best + 1e-15) {
        best = f1;
        best_cutoff = c;
      }
    }
    EXPECT_DOUBLE_EQ(select_top1_cutoff(conf, weak), best_cutoff) << "trial " << trial;
  }
}

TEST(EvaluateTest, HandFixture) {
  const std::vector<std::size_t> detected = {0, 1, 2, 7};
  const std::vector<std::size_t> truth = {0, 1, 2, 3, 4};
  const auto m = evaluate(detected, truth, 10);
  EXPECT_NEAR(m.precision, 0.75, 1e-9);
  EXPECT_NEAR(m.recall, 0.6, 1e-9);
  EXPECT_NEAR(m.f1, 2.0 / 3.0, 1e-9);
  EXPECT_EQ(m.detected, 4.0);
  EXPECT_EQ(m.truth, 5.0);
  EXPECT_EQ(m.intersection, 3.0);
}

TEST(EvaluateTest, ZeroConventionsAndDuplicates) {
  const std::vector<std::size_t> a = {2, 5, 5, 3};
  const auto same = evaluate(a, a, 6);
  EXPECT_EQ(same.precision, 1.0);
  EXPECT_EQ(same.recall, 1.0);
  EXPECT_EQ(same.f1, 1.0);
  EXPECT_EQ(same.detected, 3.0);
  const std::vector<std::size_t> other = {0, 1};
  const auto disjoint = evaluate(other, a, 6);
  EXPECT_EQ(disjoint.precision, 0.0);
  EXPECT_EQ(disjoint.f1, 0.0);
  const auto empty = evaluate({}, {}, 6);
  EXPECT_EQ(empty.precision, 0.0);
  EXPECT_EQ(empty.recall, 0.0);
  EXPECT_EQ(empty.f1, 0.0);
  const std::vector<std::size_t> out_of_range = {6};
  EXPECT_EQ(code_of([&] { evaluate(out_of_range, a, 6); }), ErrorCode::kInvalidArgument);
}

TEST(EvaluateTest, PermutationInvariantAndBounded) {
  RngStream rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(50);
    std::vector<std::size_t> e, a, perm(n);
    for (std::size_t i = 0; i < n; ++i) {
      perm[i] = i;
      if (rng.below(2)) e.push_back(i);
      if (rng.below(3) == 0) a.push_back(i);
    }
    rng.shuffle(perm);
    std::vector<std::size_t> pe, pa;
    for (auto i : e) pe.push_back(perm[i]);
    for (auto i : a) pa.push_back(perm[i]);
    const auto m = evaluate(e, a, n), pm = evaluate(pe, pa, n);
    EXPECT_EQ(m.f1, pm.f1);
    EXPECT_EQ(m.precision, pm.precision);
    EXPECT_LE(m.f1, 1.0);
    EXPECT_EQ(m.f1 == 0.0, m.intersection == 0.0);
  }
}

TEST(SplitTest, PartitionIsDeterministic) {
  const auto s = split_points(101, 42);
  EXPECT_EQ(s.calibration.size() + s.test.size(), 101u);
  EXPECT_EQ(s.calibration.size(), 51u);
  std::vector<std::size_t> all = s.calibration;
  all.insert(all.end(), s.test.begin(), s.test.end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(all[i], i);
  EXPECT_EQ(split_points(101, 42).test, s.test);
  EXPECT_NE(split_points(101, 43).test, s.test);
  EXPECT_EQ(code_of([] { split_points(10, 0, 1.0); }), ErrorCode::kInvalidArgument);
}

class EvaluationRunTest : public ::testing::Test {
 protected:
  // Even points are pure (all ones), odd points blended (all 0.5); the stub
  // answers class 0 for pure images and cycles classes for blended ones.
  void SetUp() override {
    dataset.task = Task::kClassification;
    dataset.num_classes = 4;
    dataset.image_dims = {4, 4, 1};
    std::vector<double> acc, lam;
    FeatureMatrix f(40, 2);
    for (std::size_t i = 0; i < 40; ++i) {
      const bool blended = i % 2 == 1;
      dataset.images.emplace_back(dataset.image_dims, blended ? 0.5f : 1.0f);
      dataset.labels.push_back(0);
      acc.push_back(blended ? 0.3 : 1.0);
      lam.push_back(blended ? 0.26 : 1.0);
      f.row(i)[0] = blended ? 0.5f : 1.0f;
      f.row(i)[1] = static_cast<float>(i % 5);
    }
    profile = profile_from(acc, lam);
    for (std::size_t i = 0; i < 40; ++i) profile.points[i].top1_confidence = i % 2 ? 0.4 : 0.9;
    features = f;
  }

  Dataset dataset;
  RobustnessProfile profile;
  FeatureMatrix features;
};

TEST_F(EvaluationRunTest, DetectorsAndBaselines) {
  SubprocessModel model(stub_blend());
  const DataSplit split = split_points(40, 7);
  const auto threshold = calibrate_b(profile, 0.75, 12, split.calibration);
  std::vector<bool> cal_weak;
  FeatureMatrix cal_features(split.calibration.size(), 2);
  for (std::size_t k = 0; k < split.calibration.size(); ++k) {
    const auto i = split.calibration[k];
    cal_weak.push_back(i % 2 == 1);
    std::copy(features.row(i).begin(), features.row(i).end(), cal_features.row(k).begin());
  }
  const auto wmodel = train_w(cal_features, cal_weak, default_w_train_config(1));

  EvalInputs inputs;
  inputs.profile = &profile;
  inputs.dataset = &dataset;
  inputs.model = &model;
  inputs.bthreshold = &threshold;
  inputs.wmodel = &wmodel;
  inputs.features = features;
  inputs.split = split;
  EvalOptions options;
  options.seed = 11;
  const auto report = run_evaluation(inputs, options);

  EXPECT_EQ(report.n_total, split.test.size());
  std::size_t weak_in_test = 0;
  for (auto i : split.test) weak_in_test += i % 2;
  EXPECT_EQ(report.n_truth, weak_in_test);
  for (const char* name : {"deeprobust_b", "deeprobust_w", "top1"}) {
    ASSERT_NE(report.find(name), nullptr) << name;
    EXPECT_EQ(report.find(name)->metrics.f1, 1.0) << name;
  }
  const auto* random_b = report.find("random_b");
  ASSERT_NE(random_b, nullptr);
  EXPECT_EQ(random_b->metrics.detected, static_cast<double>(weak_in_test));
  EXPECT_LT(random_b->metrics.f1, 0.9);
  EXPECT_EQ(random_b->extra.at("trials"), 100);
  EXPECT_NE(report.find("random_w"), nullptr);

  const auto doc = eval_to_json(report);
  EXPECT_EQ(doc.begin().key(), "cutoff");
  EXPECT_EQ(doc.at("detectors").size(), 5u);

  options.threads = 4;
  EXPECT_EQ(eval_to_json(run_evaluation(inputs, options)).dump(), doc.dump());
}

TEST_F(EvaluationRunTest, NeedsAnArtifact) {
  EvalInputs inputs;
  inputs.profile = &profile;
  inputs.split = split_points(40, 7);
  EXPECT_EQ(code_of([&] { run_evaluation(inputs, {}); }), ErrorCode::kMissingArtifact);
}

}  // namespace
}  // namespace robometer
