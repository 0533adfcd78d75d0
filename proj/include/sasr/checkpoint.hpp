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

#ifndef SASR_CHECKPOINT_HPP
#define SASR_CHECKPOINT_HPP

#include "sasr/networks.hpp"
#include "sasr/train.hpp"

#include <json.hpp>

#include <string>
#include <string_view>
#include <vector>

namespace sasr::checkpoint {

/**
 * Model container (.nt1d):
 *
 *   "NT1D" | u32 LE manifest length | manifest JSON (UTF-8)
 *   | one NT1 block per tensor, in manifest order
 *
 * Each layer contributes its weight (1 x rows x cols) then its bias
 * (1 x out x 1).
 */
std::string encode(const std::vector<const NetworkParams*>& networks, const nlohmann::json& extra);

struct Decoded {
  std::vector<NetworkParams> networks;
  nlohmann::json manifest;
};
Decoded decode(std::string_view bytes);

nlohmann::json history_to_json(const History& h);

}  // namespace sasr::checkpoint

#endif  // SASR_CHECKPOINT_HPP
