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

#include <filesystem>
#include <fstream>
#include <iterator>

#include "bad/checkpoint.hpp"

namespace bad::ckpt {
namespace {

namespace fs = std::filesystem;

fs::path temp_file(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "bad_ckpt_test";
  fs::create_directories(dir);
  return dir / name;
}

Checkpoint sample() {
  Checkpoint ck;
  ck.kind = "hanabi";
  ck.config = {{"variant", "v2"}, {"hidden_layers", {8}}};
  ck.extra = {{"updates", 12}};
  ck.net = nn::Mlp<float>(nn::MlpShape{6, {8}, 3}, 4);
  return ck;
}

std::string read_all(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_all(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << s;
}

TEST(Checkpoint, RoundTripIsBitExact) {
  const auto path = temp_file("rt.bin");
  const auto ck = sample();
  save_checkpoint(path.string(), ck);
  const auto back = load_checkpoint(path.string());
  EXPECT_EQ(back.kind, "hanabi");
  EXPECT_EQ(back.config, ck.config);
  EXPECT_EQ(back.extra["updates"], 12);
  EXPECT_EQ(back.net.shape(), ck.net.shape());
  EXPECT_EQ(back.net.params().flatten(), ck.net.params().flatten());
  EXPECT_EQ(read_all(path).substr(0, 8), "BADCKPT\n");
}

TEST(Checkpoint, MissingFile) {
  EXPECT_THROW(load_checkpoint(temp_file("nope.bin").string()), CheckpointError);
}

TEST(Checkpoint, CorruptionDetected) {
  const auto path = temp_file("corrupt.bin");
  save_checkpoint(path.string(), sample());
  const auto good = read_all(path);

  auto bad_magic = good;
  bad_magic[0] = 'X';
  write_all(path, bad_magic);
  EXPECT_THROW(load_checkpoint(path.string()), CheckpointError);

  write_all(path, good.substr(0, good.size() - 3));
  EXPECT_THROW(load_checkpoint(path.string()), CheckpointError);

  write_all(path, good + "extra");
  EXPECT_THROW(load_checkpoint(path.string()), CheckpointError);

  write_all(path, good.substr(0, 20));
  EXPECT_THROW(load_checkpoint(path.string()), CheckpointError);
}

TEST(Checkpoint, ConfigHashMismatch) {
  const auto path = temp_file("hash.bin");
  save_checkpoint(path.string(), sample());
  auto text = read_all(path);
  const auto pos = text.find("\"v2\"");
  ASSERT_NE(pos, std::string::npos);
  text[pos + 2] = '0';  // "v2" -> "v0", same length
  write_all(path, text);
  try {
    load_checkpoint(path.string());
    FAIL() << "expected a hash mismatch";
  } catch (const CheckpointError& e) {
    EXPECT_NE(std::string(e.what()).find("hash"), std::string::npos);
  }
}

TEST(Checkpoint, HashIsStable) {
  const nlohmann::json a = {{"b", 1}, {"a", 2}};
  const nlohmann::json b = {{"a", 2}, {"b", 1}};
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_EQ(hash_hex(0xabcULL), "0000000000000abc");
}

}  // namespace
}  // namespace bad::ckpt
