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

// Scripted external model speaking the NDJSON protocol on stdin/stdout.
//
//   stub_model [--mode M] [--classes K] [--dims H,W,C] [--no-features]
//
// Modes:
//   rule         logits peak at class floor(mean * K); features [mean, max]
//   blend        images whose max is below 0.75 cycle through the classes
//                call by call, every other image is class 0
//   missing-task hello reply without "task"
//   sleep        never answers predict
//   error        answers predict with an error reply
//   garbage      answers predict with a non-JSON line
//   wrong-id     answers predict with id + 1
//   crash        exits on the first predict
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <string>
#include <thread>

#include "robometer/error.hpp"
#include "robometer/wire_protocol.hpp"

namespace {

using namespace robometer;

struct StubConfig {
  std::string mode = "rule";
  std::size_t classes = 4;
  ImageDims dims{4, 4, 1};
  bool features = true;
};

std::vector<float> rule_logits(const Image& image, std::size_t k) {
  double mean = 0.0;
  for (float p : image.pixels) mean += p;
  mean /= static_cast<double>(image.pixels.size());
  std::vector<float> logits(k);
  for (std::size_t c = 0; c < k; ++c) {
    logits[c] = 0.0f - static_cast<float>(std::abs(mean * static_cast<double>(k) - (static_cast<double>(c) + 0.5)));
  }
  return logits;
}

std::vector<float> image_features(const Image& image) {
  double mean = 0.0;
  float max = 0.0f;
  for (float p : image.pixels) {
    mean += p;
    max = std::max(max, p);
  }
  return {static_cast<float>(mean / static_cast<double>(image.pixels.size())), max};
}

void reply(const std::string& line) {
  std::cout << line << '\n' << std::flush;
}

}  // namespace

int main(int argc, char** argv) {
  StubConfig config;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--mode" && i + 1 < argc) {
      config.mode = argv[++i];
    } else if (arg == "--classes" && i + 1 < argc) {
      config.classes = std::stoul(argv[++i]);
    } else if (arg == "--dims" && i + 1 < argc) {
      unsigned long h = 0, w = 0, c = 0;
      if (std::sscanf(argv[++i], "%lu,%lu,%lu", &h, &w, &c) != 3) return 2;
      config.dims = {h, w, c};
    } else if (arg == "--no-features") {
      config.features = false;
    } else {
      std::cerr << "stub_model: unknown argument " << arg << '\n';
      return 2;
    }
  }

  ModelInfo info;
  info.name = "stub-" + config.mode;
  info.num_classes = config.classes;
  info.input_dims = config.dims;
  if (config.features) info.feature_dim = 2;

  std::size_t calls = 0;
  std::string line;
  while (std::getline(std::cin, line)) {
    wire::Request request;
    try {
      request = wire::parse_request(line);
    } catch (const Error& e) {
      reply(wire::encode_error_reply(std::nullopt, e.what()));
      continue;
    }
    if (request.op == "hello") {
      if (config.mode == "missing-task") {
        reply(R"({"name":"broken","num_classes":2,"input_dims":[4,4,1]})");
      } else {
        reply(wire::encode_hello_reply(info));
      }
      continue;
    }
    if (request.op != "predict") {
      reply(wire::encode_error_reply(request.id, "unknown op: " + request.op));
      continue;
    }
    const auto& p = request.predict;
    if (config.mode == "sleep") {
      std::this_thread::sleep_for(std::chrono::hours(1));
    } else if (config.mode == "error") {
      reply(wire::encode_error_reply(p.id, "scripted failure"));
      continue;
    } else if (config.mode == "garbage") {
      reply("this is not json");
      continue;
    } else if (config.mode == "crash") {
      return 3;
    }
    wire::PredictReply out;
    out.id = config.mode == "wrong-id" ? p.id + 1 : p.id;
    if (p.want_features && config.features) out.features.emplace();
    for (const Image& image : p.inputs) {
      if (image.dims != config.dims) {
        out.outputs.clear();
        break;
      }
      std::vector<float> logits;
      if (config.mode == "blend") {
        const bool blended = image_features(image)[1] < 0.75f;
        const std::size_t cls = blended ? calls++ % config.classes : 0;
        logits.assign(config.classes, 0.0f);
        logits[cls] = 1.0f;
      } else {
        logits = rule_logits(image, config.classes);
      }
      out.outputs.push_back(std::move(logits));
      if (out.features) out.features->push_back(image_features(image));
    }
    if (out.outputs.size() != p.inputs.size()) {
      reply(wire::encode_error_reply(p.id, "input dims do not match the model"));
      continue;
    }
    reply(wire::encode_predict_reply(out));
  }
  return 0;
}
