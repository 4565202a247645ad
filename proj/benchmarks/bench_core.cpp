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

#include <benchmark/benchmark.h>

#include <vector>

#include "robometer/detectors.hpp"
#include "robometer/featstats.hpp"
#include "robometer/model_iface.hpp"
#include "robometer/nn.hpp"
#include "robometer/robustness.hpp"
#include "robometer/synthetic.hpp"
#include "robometer/transforms.hpp"

namespace robometer {
namespace {

Image noise_image(std::size_t side, std::size_t channels, std::uint64_t seed) {
  RngStream rng(seed);
  Image image({side, side, channels});
  for (auto& v : image.pixels) v = static_cast<float>(rng.uniform(0.0, 1.0));
  return image;
}

void BM_WarpBilinear(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const Image image = noise_image(side, 3, 1);
  const AffineMatrix m = affine_matrix(TransformSpec::spatial(17.5, 2.25, -1.5), side, side);
  for (auto _ : state) benchmark::DoNotOptimize(warp_bilinear(image, m));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(side * side));
}
BENCHMARK(BM_WarpBilinear)->Arg(16)->Arg(32)->Arg(64)->Arg(224);

void BM_Rain(benchmark::State& state) {
  const Image image = noise_image(66, 3, 2);
  RngStream rng(3);
  for (auto _ : state) benchmark::DoNotOptimize(apply_rain(image, 0.7, rng));
}
BENCHMARK(BM_Rain);

void BM_DenseForward(benchmark::State& state) {
  const auto batch = state.range(0);
  const auto net = init_dense_net<float>({256, 128, 64, 4}, OutputHead::kSoftmax, 5);
  const Eigen::MatrixXf x = Eigen::MatrixXf::Random(batch, 256);
  for (auto _ : state) benchmark::DoNotOptimize(forward(net, x));
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_DenseForward)->Arg(1)->Arg(51)->Arg(512);

void BM_DenseBackward(benchmark::State& state) {
  const auto net = init_dense_net<float>({256, 128, 64, 4}, OutputHead::kSoftmax, 5);
  const Eigen::MatrixXf x = Eigen::MatrixXf::Random(128, 256);
  std::vector<std::uint32_t> y(128);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<std::uint32_t>(i % 4);
  for (auto _ : state) benchmark::DoNotOptimize(backward(net, x, y));
}
BENCHMARK(BM_DenseBackward);

void BM_Simpson(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  RngStream rng(4);
  std::vector<std::uint32_t> classes(n);
  for (auto& c : classes) c = static_cast<std::uint32_t>(rng.below(10));
  for (auto _ : state) benchmark::DoNotOptimize(simpson_lambda(classes, 10));
}
BENCHMARK(BM_Simpson)->Arg(51)->Arg(1001);

void BM_MannWhitney(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  RngStream rng(6);
  std::vector<double> a(n), b(n);
  for (auto& v : a) v = rng.normal();
  for (auto& v : b) v = rng.normal() + 0.3;
  for (auto _ : state) benchmark::DoNotOptimize(mann_whitney_u(a, b));
}
BENCHMARK(BM_MannWhitney)->Arg(100)->Arg(10000);

// Untrained builtin model: the cost is neighbor generation plus forward.
void BM_ProfileDataset(benchmark::State& state) {
  SyntheticConfig config;
  config.n_points = 20;
  config.ambiguity_fraction = 0.3;
  config.seed = 7;
  const Dataset data = generate_synthetic_dataset(config);
  const auto d = data.image_dims.size();
  BuiltinModel model(init_dense_net<float>({d, 64, 4}, OutputHead::kSoftmax, 7), data.image_dims);
  ProfileOptions options;
  options.m = 50;
  options.threads = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(profile_dataset(model, data, options));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(data.size()));
}
BENCHMARK(BM_ProfileDataset)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace robometer

BENCHMARK_MAIN();
