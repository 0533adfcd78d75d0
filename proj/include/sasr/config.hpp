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

#ifndef SASR_CONFIG_HPP
#define SASR_CONFIG_HPP

#include "sasr/edge_maps.hpp"
#include "sasr/losses.hpp"
#include "sasr/train.hpp"

#include <json.hpp>

#include <stdexcept>
#include <string>

namespace sasr::config {

/// Schema violation: unknown key, wrong type, or invalid value.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct IoConfig {
  std::string model;
  std::string history;
};

/**
 * JSON run configuration with sections `edge`, `coeffs`, `train`, `io`.
 * Missing keys keep their defaults; unknown keys are rejected. The train
 * section's edge/coeffs always mirror the top-level sections.
 */
struct RunConfig {
  EdgeMapConfig edge;
  LossCoefficients coeffs;
  TrainConfig train;
  IoConfig io;
  /// Replace coeffs.beta2 by calibrate_beta2 before training.
  bool calibrate = false;
  std::uint64_t data_seed = 1;
};

EdgeMapConfig parse_edge(const nlohmann::json& j, EdgeMapConfig base = {});
LossCoefficients parse_coeffs(const nlohmann::json& j, LossCoefficients base = {});
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

nlohmann::json to_json(const EdgeMapConfig& c);
nlohmann::json to_json(const LossCoefficients& c);
nlohmann::json to_json(const RunConfig& c);

/// FNV-1a 64 of the default configuration's canonical dump, as hex.
std::string schema_hash();

}  // namespace sasr::config

#endif  // SASR_CONFIG_HPP
