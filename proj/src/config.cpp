/*
 * Copyright 2026 The sasr Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "sasr/config.hpp"

#include "sasr/io.hpp"

#include <cstdio>
#include <set>

namespace sasr::config {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& section) {
  if (!j.is_object()) throw ConfigError(section + ": expected an object");
  for (const auto& [key, _] : j.items())
    if (!allowed.contains(key)) throw ConfigError(section + ": unknown key '" + key + "'");
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& section) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(section + "." + key + ": wrong type");
  }
}

std::string method_name(EdgeMethod m) { return m == EdgeMethod::canny ? "canny" : "local_variance"; }

EdgeMethod parse_method(const std::string& s) {
  if (s == "local_variance" || s == "lv") return EdgeMethod::local_variance;
  if (s == "canny") return EdgeMethod::canny;
  throw ConfigError("edge.method: unknown method '" + s + "'");
}

template <typename F>
void validated(F&& f, const std::string& section) {
  try {
    f();
  } catch (const PreconditionError& e) {
    throw ConfigError(section + ": " + e.what());
  }
}

}  // namespace

EdgeMapConfig parse_edge(const json& j, EdgeMapConfig c) {
  reject_unknown(j, {"method", "window", "padding", "delta", "sigma", "low", "high"}, "edge");
  std::string method = method_name(c.method);
  read(j, "method", method, "edge");
  c.method = parse_method(method);
  read(j, "window", c.window.radius, "edge");
  std::string padding = c.window.padding == PadMode::reflect ? "reflect" : "replicate";
  read(j, "padding", padding, "edge");
  if (padding != "reflect" && padding != "replicate") throw ConfigError("edge.padding: must be reflect or replicate");
  c.window.padding = padding == "reflect" ? PadMode::reflect : PadMode::replicate;
  read(j, "delta", c.delta, "edge");
  read(j, "sigma", c.canny_sigma, "edge");
  read(j, "low", c.canny_low, "edge");
  read(j, "high", c.canny_high, "edge");
  validated([&] { c.validate(); }, "edge");
  return c;
}

LossCoefficients parse_coeffs(const json& j, LossCoefficients c) {
  reject_unknown(j, {"alpha", "alpha1", "alpha2", "beta1", "beta2", "epsilon", "norm"}, "coeffs");
  read(j, "alpha", c.alpha, "coeffs");
  read(j, "alpha1", c.alpha1, "coeffs");
  read(j, "alpha2", c.alpha2, "coeffs");
  read(j, "beta1", c.beta1, "coeffs");
  read(j, "beta2", c.beta2, "coeffs");
  read(j, "epsilon", c.epsilon, "coeffs");
  std::string norm = c.norm == Norm::l1 ? "l1" : "charbonnier";
  read(j, "norm", norm, "coeffs");
  if (norm != "l1" && norm != "charbonnier") throw ConfigError("coeffs.norm: must be l1 or charbonnier");
  c.norm = norm == "l1" ? Norm::l1 : Norm::charbonnier;
  validated([&] { c.validate(); }, "coeffs");
  return c;
}

RunConfig parse_run_config(const json& j) {
  reject_unknown(j, {"edge", "coeffs", "train", "io"}, "config");
  RunConfig rc;
  if (j.contains("edge")) rc.edge = parse_edge(j.at("edge"));
  if (j.contains("coeffs")) rc.coeffs = parse_coeffs(j.at("coeffs"));
  TrainConfig& t = rc.train;
  if (j.contains("train")) {
    const json& tj = j.at("train");
    reject_unknown(tj,
                   {"max_iterations", "lr", "lr_halving_points", "batch_size", "adam_b1", "adam_b2", "adam_eps",
                    "validate_every", "warmup_iterations", "seed", "feature_seed", "data_seed", "mode", "scale", "sa",
                    "channels", "hr_size", "train_samples", "val_samples", "calibrate"},
                   "train");
    read(tj, "max_iterations", t.max_iterations, "train");
    read(tj, "lr", t.lr, "train");
    read(tj, "lr_halving_points", t.lr_halving_points, "train");
    read(tj, "batch_size", t.batch_size, "train");
    read(tj, "adam_b1", t.adam_b1, "train");
    read(tj, "adam_b2", t.adam_b2, "train");
    read(tj, "adam_eps", t.adam_eps, "train");
    read(tj, "validate_every", t.validate_every, "train");
    read(tj, "warmup_iterations", t.warmup_iterations, "train");
    read(tj, "seed", t.seed, "train");
    read(tj, "feature_seed", t.feature_seed, "train");
    read(tj, "data_seed", rc.data_seed, "train");
    std::string mode = t.mode == InputMode::multi_frame ? "multi_frame" : "single_image";
    read(tj, "mode", mode, "train");
    if (mode != "single_image" && mode != "multi_frame") throw ConfigError("train.mode: must be single_image or multi_frame");
    t.mode = mode == "multi_frame" ? InputMode::multi_frame : InputMode::single_image;
    read(tj, "scale", t.scale, "train");
    read(tj, "sa", t.sa, "train");
    read(tj, "channels", t.channels, "train");
    read(tj, "hr_size", t.hr_size, "train");
    read(tj, "train_samples", t.train_samples, "train");
    read(tj, "val_samples", t.val_samples, "train");
    read(tj, "calibrate", rc.calibrate, "train");
  }
  t.edge_cfg = rc.edge;
  t.coeffs = rc.coeffs;
  validated([&] { t.validate(); }, "train");
  if (j.contains("io")) {
    const json& ij = j.at("io");
    reject_unknown(ij, {"model", "history"}, "io");
    read(ij, "model", rc.io.model, "io");
    read(ij, "history", rc.io.history, "io");
  }
  return rc;
}

RunConfig load_run_config(const std::string& path) {
  json j;
  try {
    j = json::parse(io::read_file(path));
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_run_config(j);
}

json to_json(const EdgeMapConfig& c) {
  return {{"method", method_name(c.method)},
          {"window", c.window.radius},
          {"padding", c.window.padding == PadMode::reflect ? "reflect" : "replicate"},
          {"delta", c.delta},
          {"sigma", c.canny_sigma},
          {"low", c.canny_low},
          {"high", c.canny_high}};
}

json to_json(const LossCoefficients& c) {
  return {{"alpha", c.alpha},   {"alpha1", c.alpha1},   {"alpha2", c.alpha2},
          {"beta1", c.beta1},   {"beta2", c.beta2},     {"epsilon", c.epsilon},
          {"norm", c.norm == Norm::l1 ? "l1" : "charbonnier"}};
}

json to_json(const RunConfig& c) {
  const TrainConfig& t = c.train;
  return {{"edge", to_json(c.edge)},
          {"coeffs", to_json(c.coeffs)},
          {"train",
           {{"max_iterations", t.max_iterations},
            {"lr", t.lr},
            {"lr_halving_points", t.lr_halving_points},
            {"batch_size", t.batch_size},
            {"adam_b1", t.adam_b1},
            {"adam_b2", t.adam_b2},
            {"adam_eps", t.adam_eps},
            {"validate_every", t.validate_every},
            {"warmup_iterations", t.warmup_iterations},
            {"seed", t.seed},
            {"feature_seed", t.feature_seed},
            {"data_seed", c.data_seed},
            {"mode", t.mode == InputMode::multi_frame ? "multi_frame" : "single_image"},
            {"scale", t.scale},
            {"sa", t.sa},
            {"channels", t.channels},
            {"hr_size", t.hr_size},
            {"train_samples", t.train_samples},
            {"val_samples", t.val_samples},
            {"calibrate", c.calibrate}}},
          {"io", {{"model", c.io.model}, {"history", c.io.history}}}};
}

std::string schema_hash() {
  const std::string canon = to_json(RunConfig{}).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canon) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace sasr::config
