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

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include <nlohmann/json.hpp>

namespace {

namespace fs = std::filesystem;

struct Run {
  int code = -1;
  std::string out;
};

fs::path scratch() {
  const auto dir = fs::temp_directory_path() / "bad_cli_test";
  fs::create_directories(dir);
  return dir;
}

Run run(const std::string& args) {
  const auto out = scratch() / "stdout.txt";
  const std::string cmd = std::string(BAD_CLI_PATH) + " " + args + " > " + out.string() + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(out);
  r.out.assign(std::istreambuf_iterator<char>(in), {});
  return r;
}

std::string fixture(const std::string& name) { return std::string(BAD_SOURCE_DIR) + "/fixtures/" + name; }

TEST(Cli, OracleReportsBothValues) {
  const auto r = run("oracle --payoff " + fixture("matrix_payoff.json"));
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_DOUBLE_EQ(j["optimal_value"].get<double>(), 10.0);
  EXPECT_DOUBLE_EQ(j["signalling_free_value"].get<double>(), 8.0);
  const auto meta = nlohmann::json::parse(std::ifstream(fixture("matrix_payoff.meta.json")));
  EXPECT_DOUBLE_EQ(j["optimal_value"].get<double>(), meta["optimal_value"].get<double>());
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run("eval --checkpoint " + (scratch() / "missing.bin").string()).code, 3);
  EXPECT_EQ(run("eval --policy random --games 2 --config " + fixture("no_such_config.json")).code, 2);
  EXPECT_EQ(run("no-such-command").code, 2);
  EXPECT_EQ(run("eval --belief v9").code, 2);
  const auto bad_cfg = scratch() / "bad.json";
  std::ofstream(bad_cfg) << R"({"game": {"n_colour": 3}})";
  EXPECT_EQ(run("eval --policy random --config " + bad_cfg.string()).code, 2);
  const auto junk = scratch() / "junk.bin";
  std::ofstream(junk) << "not a checkpoint";
  EXPECT_EQ(run("eval --checkpoint " + junk.string()).code, 2);
}

TEST(Cli, TrainEvalRoundTrip) {
  const auto dir = scratch() / "hanabi";
  const auto cfg = scratch() / "tiny.json";
  std::ofstream(cfg) << R"({"game": {"n_color": 2, "n_rank": 3, "hand_size": 2},
    "belief": {"sample_count": 20, "eval_sample_count": 20},
    "train": {"batch_size": 2, "hidden_layers": [8]},
    "run": {"total_steps": 60, "eval_games": 4}})";
  ASSERT_EQ(run("train-hanabi --config " + cfg.string() + " --out " + dir.string()).code, 0);
  const auto ck = (dir / "checkpoint.bin").string();
  ASSERT_TRUE(fs::exists(ck));
  EXPECT_TRUE(fs::exists(dir / "metrics.csv"));

  const auto ev = run("eval --checkpoint " + ck + " --games 4");
  ASSERT_EQ(ev.code, 0);
  const auto j = nlohmann::json::parse(ev.out);
  EXPECT_EQ(j["n_games"], 4);

  // A run configuration that disagrees with the checkpoint is refused.
  const auto other = scratch() / "other.json";
  std::ofstream(other) << R"({"game": {"n_color": 3, "n_rank": 3, "hand_size": 2}})";
  EXPECT_EQ(run("eval --checkpoint " + ck + " --config " + other.string()).code, 2);

  const auto dump = run("dump-games --checkpoint " + ck + " --games 2 --out " + dir.string());
  ASSERT_EQ(dump.code, 0);
  std::ifstream lines(dir / "transcripts.jsonl");
  int n = 0;
  for (std::string line; std::getline(lines, line);) {
    EXPECT_TRUE(nlohmann::json::accept(line));
    ++n;
  }
  EXPECT_EQ(n, 2);

  const auto rep = run("belief-report --checkpoint " + ck + " --games 2");
  ASSERT_EQ(rep.code, 0);
  EXPECT_EQ(rep.out.rfind("t,ce_v0,ce_v1,ce_v2,n", 0), 0u);
}

TEST(Cli, TrainMatrixWritesCurve) {
  const auto dir = scratch() / "matrix";
  const auto cfg = scratch() / "matrix.json";
  std::ofstream(cfg) << R"({"train": {"optimizer": "adam", "learning_rate": 0.001, "hidden_layers": [8]},
    "matrix": {"updates": 20, "eval_every": 10, "eval_games": 50}})";
  const auto r = run("train-matrix --config " + cfg.string() + " --payoff " + fixture("matrix_payoff.json") +
                     " --out " + dir.string());
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["agent"], "bad");
  std::ifstream csv(dir / "matrix_metrics.csv");
  int lines = 0;
  for (std::string line; std::getline(csv, line);) ++lines;
  EXPECT_EQ(lines, 3);
  EXPECT_TRUE(fs::exists(dir / "matrix_checkpoint.bin"));
  EXPECT_EQ(run("train-matrix --agent vanilla --cf-gradients --config " + cfg.string() + " --payoff " +
                fixture("matrix_payoff.json") + " --out " + dir.string())
                .code,
            2);
}

}  // namespace
