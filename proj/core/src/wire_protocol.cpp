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

#include "robometer/wire_protocol.hpp"

#include <charconv>
#include <cmath>

#include <nlohmann/json.hpp>

#include "robometer/error.hpp"

namespace robometer::wire {
namespace {

using nlohmann::json;

json parse_line(std::string_view line) {
  try {
    return json::parse(line);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kProtocol, std::string("malformed JSON line: ") + e.what());
  }
}

void append_row(std::string& out, std::span<const float> row) {
  out += '[';
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i > 0) out += ',';
    out += format_float(row[i]);
  }
  out += ']';
}

void append_rows(std::string& out, const std::vector<std::vector<float>>& rows) {
  out += '[';
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0) out += ',';
    append_row(out, rows[i]);
  }
  out += ']';
}

std::vector<std::vector<float>> parse_rows(const json& doc, const char* field) {
  if (!doc.is_array()) throw Error(ErrorCode::kProtocol, std::string(field) + " must be an array");
  std::vector<std::vector<float>> rows;
  rows.reserve(doc.size());
  for (const auto& row : doc) {
    if (!row.is_array()) {
      throw Error(ErrorCode::kProtocol, std::string(field) + " rows must be arrays");
    }
    std::vector<float> values;
    values.reserve(row.size());
    for (const auto& v : row) {
      if (!v.is_number()) throw Error(ErrorCode::kProtocol, std::string(field) + " must be numeric");
      values.push_back(static_cast<float>(v.get<double>()));
    }
    rows.push_back(std::move(values));
  }
  return rows;
}

}  // namespace

std::string format_float(float value) {
  if (!std::isfinite(value)) throw Error(ErrorCode::kProtocol, "cannot encode non-finite float");
  char buf[32];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

std::string encode_hello_request() { return R"({"op":"hello"})"; }

std::string encode_hello_reply(const ModelInfo& info) {
  nlohmann::ordered_json doc;
  doc["name"] = info.name;
  doc["task"] = task_name(info.task);
  if (info.task == Task::kClassification) doc["num_classes"] = info.num_classes;
  if (info.feature_dim) doc["feature_dim"] = *info.feature_dim;
  doc["input_dims"] = {info.input_dims.height, info.input_dims.width, info.input_dims.channels};
  return doc.dump();
}

ModelInfo parse_hello_reply(std::string_view line) {
  const json doc = parse_line(line);
  if (!doc.is_object()) throw Error(ErrorCode::kProtocol, "hello reply must be an object");
  if (doc.contains("error")) {
    throw Error(ErrorCode::kProtocol, "hello rejected: " + doc["error"].dump());
  }
  ModelInfo info;
  try {
    if (!doc.contains("task")) throw Error(ErrorCode::kProtocol, "hello reply missing \"task\"");
    info.task = parse_task(doc["task"].get<std::string>());
    info.name = doc.value("name", std::string("external"));
    if (info.task == Task::kClassification) {
      if (!doc.contains("num_classes")) {
        throw Error(ErrorCode::kProtocol, "hello reply missing \"num_classes\"");
      }
      info.num_classes = doc["num_classes"].get<std::size_t>();
    }
    if (doc.contains("feature_dim") && !doc["feature_dim"].is_null()) {
      info.feature_dim = doc["feature_dim"].get<std::size_t>();
    }
    const auto& dims = doc.at("input_dims");
    if (!dims.is_array() || dims.size() != 3) {
      throw Error(ErrorCode::kProtocol, "hello input_dims must be [H, W, C]");
    }
    info.input_dims = {dims[0].get<std::size_t>(), dims[1].get<std::size_t>(),
                       dims[2].get<std::size_t>()};
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kProtocol, std::string("hello reply: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kProtocol) throw;
    throw Error(ErrorCode::kProtocol, e.what());
  }
  validate_model_info(info);
  return info;
}

std::string encode_predict_request(std::int64_t id, std::span<const Image> images,
                                   bool want_features) {
  const ImageDims d = images.empty() ? ImageDims{} : images.front().dims;
  std::string out = R"({"id":)" + std::to_string(id) + R"(,"op":"predict","shape":[)" +
                    std::to_string(d.height) + "," + std::to_string(d.width) + "," +
                    std::to_string(d.channels) + R"(],"inputs":[)";
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].dims != d) throw Error(ErrorCode::kDimensionMismatch, "batch images differ in dims");
    if (i > 0) out += ',';
    append_row(out, images[i].pixels);
  }
  out += R"(],"want_features":)";
  out += want_features ? "true" : "false";
  out += '}';
  return out;
}

Request parse_request(std::string_view line) {
  const json doc = parse_line(line);
  if (!doc.is_object()) throw Error(ErrorCode::kProtocol, "request must be an object");
  Request request;
  try {
    if (doc.contains("id") && doc["id"].is_number_integer()) request.id = doc["id"].get<std::int64_t>();
    request.op = doc.at("op").get<std::string>();
    if (request.op == "predict") {
      auto& p = request.predict;
      p.id = request.id.value_or(0);
      const auto& shape = doc.at("shape");
      p.shape = {shape.at(0).get<std::size_t>(), shape.at(1).get<std::size_t>(),
                 shape.at(2).get<std::size_t>()};
      for (auto& row : parse_rows(doc.at("inputs"), "inputs")) {
        p.inputs.emplace_back(p.shape, std::move(row));
      }
      p.want_features = doc.value("want_features", false);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kProtocol, std::string("request: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kProtocol) throw;
    throw Error(ErrorCode::kProtocol, e.what());
  }
  return request;
}

std::string encode_predict_reply(const PredictReply& reply) {
  std::string out = R"({"id":)" + std::to_string(reply.id) + R"(,"outputs":)";
  append_rows(out, reply.outputs);
  if (reply.features) {
    out += R"(,"features":)";
    append_rows(out, *reply.features);
  }
  out += '}';
  return out;
}

std::string encode_error_reply(std::optional<std::int64_t> id, std::string_view message) {
  nlohmann::ordered_json doc;
  doc["id"] = id ? json(*id) : json(nullptr);
  doc["error"] = std::string(message);
  return doc.dump();
}

std::vector<Prediction> parse_predict_reply(std::string_view line, std::int64_t expected_id,
                                            std::size_t expected_count, const ModelInfo& info,
                                            bool want_features) {
  const json doc = parse_line(line);
  if (!doc.is_object()) throw Error(ErrorCode::kProtocol, "reply must be an object");
  if (doc.contains("error")) {
    const std::string msg =
        doc["error"].is_string() ? doc["error"].get<std::string>() : doc["error"].dump();
    throw Error(ErrorCode::kAdapter, "model reported error: " + msg);
  }
  if (!doc.contains("id") || !doc["id"].is_number_integer() ||
      doc["id"].get<std::int64_t>() != expected_id) {
    throw Error(ErrorCode::kProtocol, "reply id does not match request " + std::to_string(expected_id));
  }
  if (!doc.contains("outputs")) throw Error(ErrorCode::kProtocol, "reply missing \"outputs\"");
  auto outputs = parse_rows(doc["outputs"], "outputs");
  if (outputs.size() != expected_count) {
    throw Error(ErrorCode::kProtocol, "reply has " + std::to_string(outputs.size()) +
                                          " outputs, expected " + std::to_string(expected_count));
  }
  std::optional<std::vector<std::vector<float>>> features;
  if (doc.contains("features") && !doc["features"].is_null()) {
    features = parse_rows(doc["features"], "features");
    if (features->size() != expected_count) {
      throw Error(ErrorCode::kProtocol, "reply feature count does not match outputs");
    }
  }
  const std::size_t width = info.task == Task::kClassification ? info.num_classes : 1;
  std::vector<Prediction> predictions(expected_count);
  for (std::size_t i = 0; i < expected_count; ++i) {
    if (outputs[i].size() != width) {
      throw Error(ErrorCode::kProtocol, "output row " + std::to_string(i) + " has width " +
                                            std::to_string(outputs[i].size()));
    }
    predictions[i].outputs = std::move(outputs[i]);
    if (info.task == Task::kClassification) {
      predictions[i].top1_confidence = top1_confidence(predictions[i].outputs);
    }
    if (want_features && features) {
      if (info.feature_dim && (*features)[i].size() != *info.feature_dim) {
        throw Error(ErrorCode::kProtocol, "feature row width differs from feature_dim");
      }
      predictions[i].features = std::move((*features)[i]);
    }
  }
  return predictions;
}

}  // namespace robometer::wire
