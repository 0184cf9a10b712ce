// Copyright 2026 The BAD Lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include "bad/config.hpp"

namespace bad::config {
namespace {

TEST(Config, DefaultsRoundTrip) {
  const RunConfig c;
  const auto back = from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_EQ(back.game.hand(), 5);
  EXPECT_EQ(back.belief.iterations, 100);
  EXPECT_DOUBLE_EQ(back.belief.v1_mixin, 0.01);
  EXPECT_EQ(back.belief.sample_count, 3000);
  EXPECT_EQ(back.train.batch_size, 32);
}

TEST(Config, PartialOverrides) {
  const auto c = from_json(json::parse(R"({"game": {"n_color": 2, "hand_size": 2}, "train": {"optimizer": "adam"}})"));
  EXPECT_EQ(c.game.n_color, 2);
  EXPECT_EQ(c.game.hand(), 2);
  EXPECT_EQ(c.train.optimizer, "adam");
  EXPECT_EQ(c.game.n_rank, 5);
}

TEST(Config, UnknownKeysRejected) {
  EXPECT_THROW(from_json(json::parse(R"({"game": {"colours": 3}})")), ConfigError);
  EXPECT_THROW(from_json(json::parse(R"({"trainer": {}})")), ConfigError);
  EXPECT_THROW(from_json(json::parse(R"([1, 2])")), ConfigError);
}

TEST(Config, WrongTypesRejected) {
  EXPECT_THROW(from_json(json::parse(R"({"game": {"n_color": "five"}})")), ConfigError);
  EXPECT_THROW(from_json(json::parse(R"({"train": {"hidden_layers": 128}})")), ConfigError);
  EXPECT_THROW(from_json(json::parse(R"({"game": {"hand_size": 2.5}})")), ConfigError);
}

TEST(Config, RangeChecks) {
  EXPECT_THROW(from_json(json::parse(R"({"belief": {"v1_mixin": 2.0}})")), ConfigError);
  EXPECT_THROW(from_json(json::parse(R"({"run": {"variant": "v7"}})")), ConfigError);
  EXPECT_THROW(from_json(json::parse(R"({"game": {"n_players": 7}})")), ConfigError);
  EXPECT_THROW(from_json(json::parse(R"({"matrix": {"agent": "oracle"}})")), ConfigError);
}

TEST(Config, FixturesLoad) {
  const std::string dir = std::string(BAD_SOURCE_DIR) + "/fixtures/";
  for (const char* name : {"hanabi.json", "mini_hanabi.json", "matrix.json"}) {
    SCOPED_TRACE(name);
    EXPECT_NO_THROW(load(dir + name));
  }
  EXPECT_THROW(load(dir + "does_not_exist.json"), ConfigError);
}

TEST(Config, ModelJsonIgnoresRunLength) {
  RunConfig a, b;
  b.run.total_steps = 5;
  EXPECT_EQ(hanabi_model_json(a), hanabi_model_json(b));
  b.run.variant = "v0";
  EXPECT_NE(hanabi_model_json(a), hanabi_model_json(b));
}

}  // namespace
}  // namespace bad::config
