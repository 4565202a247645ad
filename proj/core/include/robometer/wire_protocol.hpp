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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "robometer/model_iface.hpp"

namespace robometer::wire {

// Newline-delimited JSON: one document per line, UTF-8, '\n' terminated.
// The encoders below return the line without its terminator.

std::string encode_hello_request();
std::string encode_hello_reply(const ModelInfo& info);
ModelInfo parse_hello_reply(std::string_view line);

std::string encode_predict_request(std::int64_t id, std::span<const Image> images,
                                   bool want_features);

struct PredictRequest {
  std::int64_t id = 0;
  ImageDims shape;
  std::vector<Image> inputs;
  bool want_features = false;
};

/// Parses any request line; op is "hello" or "predict".
struct Request {
  std::optional<std::int64_t> id;
  std::string op;
  PredictRequest predict;
};
Request parse_request(std::string_view line);

struct PredictReply {
  std::int64_t id = 0;
  std::vector<std::vector<float>> outputs;
  std::optional<std::vector<std::vector<float>>> features;
};

std::string encode_predict_reply(const PredictReply& reply);
std::string encode_error_reply(std::optional<std::int64_t> id, std::string_view message);

/// Converts a reply into predictions. Throws kAdapter for an error reply and
/// kProtocol for malformed ones or id/count mismatches.
std::vector<Prediction> parse_predict_reply(std::string_view line, std::int64_t expected_id,
                                            std::size_t expected_count, const ModelInfo& info,
                                            bool want_features);

/// Shortest text that parses back to the same float.
std::string format_float(float value);

}  // namespace robometer::wire
