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

#include <gtest/gtest.h>

using namespace sasr;
using nlohmann::json;

TEST(Config, DefaultsWhenEmpty) {
  const config::RunConfig rc = config::parse_run_config(json::object());
  EXPECT_EQ(rc.edge.method, EdgeMethod::local_variance);
  EXPECT_EQ(rc.coeffs.beta2, 20.0);
  EXPECT_EQ(rc.train.lr, 1e-4);
  EXPECT_FALSE(rc.calibrate);
}

TEST(Config, UnknownKeysRejected) {
  EXPECT_THROW(config::parse_run_config(json{{"trian", json::object()}}), config::ConfigError);
  EXPECT_THROW(config::parse_run_config(json{{"train", {{"lr_rate", 1.0}}}}), config::ConfigError);
  EXPECT_THROW(config::parse_edge(json{{"radius", 2}}), config::ConfigError);
  EXPECT_THROW(config::parse_coeffs(json{{"gamma", 2}}), config::ConfigError);
}

TEST(Config, InvalidValuesRejected) {
  EXPECT_THROW(config::parse_edge(json{{"method", "sobel"}}), config::ConfigError);
  EXPECT_THROW(config::parse_edge(json{{"method", "canny"}, {"low", 0.5}, {"high", 0.2}}), config::ConfigError);
  EXPECT_THROW(config::parse_edge(json{{"delta", "big"}}), config::ConfigError);
  EXPECT_THROW(config::parse_coeffs(json{{"epsilon", 0.0}}), config::ConfigError);
  EXPECT_THROW(config::parse_coeffs(json{{"norm", "l2"}}), config::ConfigError);
  EXPECT_THROW(config::parse_run_config(json{{"train", {{"batch_size", 0}}}}), config::ConfigError);
  EXPECT_THROW(config::parse_run_config(json{{"train", {{"mode", "video"}}}}), config::ConfigError);
}

TEST(Config, ParsesFields) {
  const json j = {{"edge", {{"method", "canny"}, {"sigma", 1.5}, {"low", 0.05}, {"high", 0.3}}},
                  {"coeffs", {{"beta2", 1.5}, {"norm", "charbonnier"}}},
                  {"train", {{"max_iterations", 10}, {"mode", "multi_frame"}, {"lr_halving_points", {5}}, {"data_seed", 9}, {"calibrate", true}}},
                  {"io", {{"model", "m.nt1d"}}}};
  const config::RunConfig rc = config::parse_run_config(j);
  EXPECT_EQ(rc.edge.method, EdgeMethod::canny);
  EXPECT_EQ(rc.edge.canny_sigma, 1.5);
  EXPECT_EQ(rc.coeffs.beta2, 1.5);
  EXPECT_EQ(rc.coeffs.norm, Norm::charbonnier);
  EXPECT_EQ(rc.train.mode, InputMode::multi_frame);
  EXPECT_EQ(rc.train.coeffs.beta2, 1.5);
  EXPECT_EQ(rc.train.edge_cfg.method, EdgeMethod::canny);
  EXPECT_EQ(rc.data_seed, 9u);
  EXPECT_TRUE(rc.calibrate);
  EXPECT_EQ(rc.io.model, "m.nt1d");
}

TEST(Config, RoundTrip) {
  const json j = {{"edge", {{"window", 2}, {"padding", "replicate"}, {"delta", 0.02}}},
                  {"coeffs", {{"alpha", 0.01}, {"beta1", 0.02}}},
                  {"train", {{"max_iterations", 100}, {"batch_size", 4}, {"seed", 3}, {"sa", false}, {"lr_halving_points", {10, 50}}}}};
  const json once = config::to_json(config::parse_run_config(j));
  const json twice = config::to_json(config::parse_run_config(once));
  EXPECT_EQ(once.dump(), twice.dump());
  EXPECT_EQ(once["edge"]["padding"], "replicate");
  EXPECT_EQ(once["train"]["sa"], false);
}

TEST(Config, SchemaHashIsStable) {
  const std::string h = config::schema_hash();
  EXPECT_EQ(h.size(), 16u);
  EXPECT_EQ(h, config::schema_hash());
}
