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

// Command-line entry point: training, evaluation, belief reports, transcripts
// and the matrix-game oracle.
//
// Exit codes: 0 success, 1 runtime failure, 2 invalid configuration or
// checkpoint/config mismatch, 3 missing checkpoint.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "bad/checkpoint.hpp"
#include "bad/config.hpp"
#include "bad/error.hpp"
#include "bad/evalkit.hpp"
#include "bad/matrix_agent.hpp"
#include "bad/matrix_game.hpp"
#include "bad/rollout.hpp"
#include "bad/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct MissingCheckpoint : bad::Error {
  using bad::Error::Error;
};

struct Options {
  std::string config;
  std::string checkpoint;
  std::string out;
  std::string payoff;
  std::string belief;
  std::string agent = "bad";
  std::string policy = "network";
  std::optional<std::uint64_t> seed;
  std::optional<int> games;
  std::optional<long> steps;
  std::optional<int> workers;
  bool strict = false;
  bool cf_gradients = false;
  bool no_beliefs = false;
  std::string trajectories;
};

bad::config::RunConfig load_config(const Options& o) {
  bad::config::RunConfig rc = o.config.empty() ? bad::config::RunConfig{} : bad::config::load(o.config);
  if (o.seed) rc.run.seed = *o.seed;
  if (o.workers) rc.run.workers = *o.workers;
  if (o.steps) rc.run.total_steps = *o.steps;
  if (!o.belief.empty()) rc.run.variant = o.belief;
  if (o.strict) rc.game.strict_scoring = true;
  if (o.cf_gradients) rc.train.cf_gradients = true;
  if (!o.payoff.empty()) rc.matrix.payoff = o.payoff;
  rc.validate();
  return rc;
}

void banner(const std::string& command, const bad::config::RunConfig& rc) {
  std::cerr << "# bad_cli " << command << " effective config: " << bad::config::to_json(rc).dump() << "\n";
}

void ensure_dir(const std::string& dir) {
  if (!dir.empty()) fs::create_directories(dir);
}

std::string out_path(const std::string& dir, const std::string& name) {
  return dir.empty() ? name : (fs::path(dir) / name).string();
}

bad::ckpt::Checkpoint open_checkpoint(const std::string& path) {
  if (path.empty()) throw bad::ConfigError("--checkpoint is required");
  if (!fs::exists(path)) throw MissingCheckpoint("checkpoint not found: " + path);
  return bad::ckpt::load_checkpoint(path);
}

// Model configuration of a Hanabi checkpoint, checked against the run config
// when one was given explicitly.
bad::config::RunConfig hanabi_config_for(const bad::ckpt::Checkpoint& ck, const Options& o) {
  if (ck.kind != "hanabi") throw bad::CheckpointError("checkpoint holds a " + ck.kind + " model, not hanabi");
  bad::config::RunConfig rc = load_config(o);
  if (o.config.empty()) {
    rc.game = bad::config::game_from_json(ck.config.at("game"));
    rc.run.variant = ck.config.at("variant").get<std::string>();
    rc.run.horizon = ck.config.at("horizon").get<int>();
    rc.train.hidden_layers = ck.config.at("hidden_layers").get<std::vector<int>>();
    if (o.strict) rc.game.strict_scoring = true;
    if (!o.belief.empty()) rc.run.variant = o.belief;
  }
  json want = ck.config;
  json have = bad::config::hanabi_model_json(rc);
  // Scoring rule affects evaluation only.
  want["game"]["strict_scoring"] = have["game"]["strict_scoring"];
  if (bad::ckpt::config_hash(want) != bad::ckpt::config_hash(have))
    throw bad::ConfigError("configuration does not match checkpoint (hash " +
                           bad::ckpt::hash_hex(bad::ckpt::config_hash(have)) + " vs " +
                           bad::ckpt::hash_hex(bad::ckpt::config_hash(want)) + ")");
  rc.validate();
  return rc;
}

bad::rollout::AgentSpec eval_spec(const bad::config::RunConfig& rc, bool random_policy) {
  bad::rollout::AgentSpec spec;
  spec.variant = bad::pubmdp::parse_variant(rc.run.variant);
  spec.belief = rc.belief;
  spec.sample_count = rc.belief.eval_sample_count;
  spec.inv_temp = rc.run.eval_inv_temp;
  spec.horizon = rc.run.eval_horizon;
  spec.random_policy = random_policy;
  return spec;
}

// Loads the network for eval-style commands, or none for the random policy.
struct PolicySource {
  bad::config::RunConfig rc;
  std::optional<bad::nn::Mlp<float>> net;
};

PolicySource policy_source(const Options& o) {
  PolicySource ps;
  if (o.policy == "random") {
    ps.rc = load_config(o);
    return ps;
  }
  if (o.policy != "network") throw bad::ConfigError("--policy must be 'network' or 'random'");
  auto ck = open_checkpoint(o.checkpoint);
  ps.rc = hanabi_config_for(ck, o);
  ps.net = std::move(ck.net);
  return ps;
}

json stats_json(const bad::eval::ScoreStats& st) {
  return {{"n_games", st.n_games},       {"mean", st.mean},
          {"sem", st.sem},               {"sd", st.sd},
          {"raw_mean", st.raw_mean},     {"strict_mean", st.strict_mean},
          {"strict_sem", st.strict_sem}, {"perfect_fraction", st.perfect_fraction},
          {"histogram", st.histogram},   {"strict_histogram", st.strict_histogram},
          {"truncated", st.truncated},   {"empty_sample_events", st.empty_sample_events}};
}

int cmd_oracle(const Options& o) {
  const std::string path = o.payoff.empty() ? load_config(o).matrix.payoff : o.payoff;
  const auto payoff = bad::matrix::PayoffTensor::load(path);
  const double best = bad::matrix::mg_optimal_value(payoff);
  const double free = bad::matrix::mg_signalling_free_value(payoff);
  std::cout << std::setprecision(10) << json{{"payoff", path}, {"optimal_value", best}, {"signalling_free_value", free}}.dump()
            << "\n";
  return 0;
}

int cmd_train_matrix(const Options& o) {
  auto rc = load_config(o);
  if (o.agent != "bad" && o.agent != "vanilla") throw bad::ConfigError("--agent must be 'bad' or 'vanilla'");
  const std::string agent = o.agent != "bad" ? o.agent : rc.matrix.agent;
  rc.matrix.agent = agent;
  if (agent == "vanilla" && rc.train.cf_gradients)
    throw bad::ConfigError("counterfactual gradients need the public belief (agent 'bad')");
  banner("train-matrix", rc);
  const auto payoff = bad::matrix::PayoffTensor::load(rc.matrix.payoff);
  bad::matrix::MatrixTrainOptions mo;
  mo.kind = agent == "vanilla" ? bad::matrix::MatrixAgent::kVanilla
            : rc.train.cf_gradients ? bad::matrix::MatrixAgent::kBadCf
                                    : bad::matrix::MatrixAgent::kBad;
  mo.train = rc.train;
  mo.updates = rc.matrix.updates;
  mo.seed = rc.run.seed;
  mo.eval_every = rc.matrix.eval_every;
  mo.eval_games = rc.matrix.eval_games;
  ensure_dir(o.out);
  std::ofstream csv(out_path(o.out, "matrix_metrics.csv"));
  csv << "update,train_reward,eval_value,greedy_value\n" << std::setprecision(8);
  auto res = bad::matrix::train_matrix(payoff, mo, [&](const bad::matrix::MatrixCurvePoint& p) {
    csv << p.update << ',' << p.train_reward << ',' << p.eval_value << ',' << p.greedy_value << '\n';
    csv.flush();
  });
  bad::ckpt::Checkpoint ck;
  ck.kind = "matrix";
  ck.config = {{"payoff", payoff.to_json()}, {"agent", to_string(mo.kind)}, {"hidden_layers", rc.train.hidden_layers}};
  ck.extra = {{"updates", mo.updates}, {"seed", mo.seed}, {"final_value", res.final_value}};
  ck.net = res.net;
  bad::ckpt::save_checkpoint(out_path(o.out, "matrix_checkpoint.bin"), ck);
  std::cout << json{{"agent", to_string(mo.kind)},
                    {"final_value", res.final_value},
                    {"greedy_value", res.final_greedy},
                    {"optimal_value", bad::matrix::mg_optimal_value(payoff)},
                    {"signalling_free_value", bad::matrix::mg_signalling_free_value(payoff)},
                    {"skipped_steps", res.skipped_steps}}
                   .dump()
            << "\n";
  return 0;
}

int cmd_train_hanabi(const Options& o) {
  const auto rc = load_config(o);
  banner("train-hanabi", rc);
  bad::train::HanabiTrainOptions to;
  to.game = rc.game;
  to.belief = rc.belief;
  to.train = rc.train;
  to.variant = bad::pubmdp::parse_variant(rc.run.variant);
  to.horizon = rc.run.horizon;
  to.total_steps = rc.run.total_steps;
  to.seed = rc.run.seed;
  to.workers = rc.run.workers;
  to.log_every = rc.run.log_every;
  ensure_dir(o.out);
  std::ofstream csv(out_path(o.out, "metrics.csv"));
  csv << "update,env_steps,member,mean_score,pg_loss,baseline_loss,entropy,ce_v0,ce_v1,ce_v2,learning_rate,"
         "entropy_weight,skipped_steps,grad_norm\n"
      << std::setprecision(8);
  auto res = bad::train::train_hanabi(to, [&](const bad::train::TrainMetrics& m) {
    csv << m.update << ',' << m.env_steps << ',' << m.member << ',' << m.mean_score << ',' << m.pg_loss << ','
        << m.baseline_loss << ',' << m.entropy << ',' << m.ce_v0 << ',' << m.ce_v1 << ',' << m.ce_v2 << ','
        << m.learning_rate << ',' << m.entropy_weight << ',' << m.skipped_steps << ',' << m.grad_norm << '\n';
    csv.flush();
    std::cerr << "update " << m.update << " steps " << m.env_steps << " score " << m.mean_score << "\n";
  });
  bad::ckpt::Checkpoint ck;
  ck.kind = "hanabi";
  ck.config = bad::config::hanabi_model_json(rc);
  ck.extra = {{"env_steps", res.env_steps}, {"updates", res.updates}, {"seed", rc.run.seed},
              {"best_member", res.best_member}, {"evolutions", res.evolutions.size()}};
  ck.net = res.net;
  const auto path = out_path(o.out, "checkpoint.bin");
  bad::ckpt::save_checkpoint(path, ck);
  std::cout << json{{"checkpoint", path}, {"env_steps", res.env_steps}, {"updates", res.updates}}.dump() << "\n";
  return 0;
}

int cmd_eval(const Options& o) {
  auto ps = policy_source(o);
  if (o.games) ps.rc.run.eval_games = *o.games;
  banner("eval", ps.rc);
  const auto spec = eval_spec(ps.rc, o.policy == "random");
  const auto st = bad::eval::evaluate<float>(ps.rc.game, ps.net ? &*ps.net : nullptr, spec, ps.rc.run.eval_games,
                                              ps.rc.run.seed, ps.rc.run.workers, ps.rc.run.horizon);
  const json j = stats_json(st);
  if (!o.out.empty()) {
    ensure_dir(o.out);
    std::ofstream(out_path(o.out, "eval.json")) << j.dump(2) << "\n";
  }
  std::cout << j.dump() << "\n";
  return 0;
}

int cmd_belief_report(const Options& o) {
  auto ps = policy_source(o);
  if (o.games) ps.rc.run.eval_games = *o.games;
  banner("belief-report", ps.rc);
  auto spec = eval_spec(ps.rc, o.policy == "random");
  const auto rep = bad::eval::belief_quality_report<float>(ps.rc.game, ps.net ? &*ps.net : nullptr, spec,
                                                            ps.rc.run.eval_games, ps.rc.run.seed, ps.rc.run.workers,
                                                            ps.rc.run.horizon);
  if (!o.out.empty()) {
    ensure_dir(o.out);
    std::ofstream csv(out_path(o.out, "belief_ce.csv"));
    bad::eval::write_ce_csv(csv, rep);
  } else {
    bad::eval::write_ce_csv(std::cout, rep);
  }
  return 0;
}

// Training-style rollouts written as raw little-endian records, for
// byte-level reproducibility checks.
void write_trajectories(const std::string& path, const std::vector<bad::rollout::EpisodeResult>& eps) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw bad::Error("cannot write " + path);
  auto put32 = [&](std::uint32_t v) {
    for (int k = 0; k < 4; ++k) out.put(static_cast<char>((v >> (8 * k)) & 0xff));
  };
  for (const auto& e : eps)
    for (const auto& tr : e.trajectories) {
      put32(static_cast<std::uint32_t>(tr.length));
      put32(static_cast<std::uint32_t>(tr.input_size));
      for (float x : tr.inputs) put32(std::bit_cast<std::uint32_t>(x));
      for (auto b : tr.legal) out.put(static_cast<char>(b));
      for (int a : tr.actions) put32(static_cast<std::uint32_t>(a));
      for (float r : tr.rewards) put32(std::bit_cast<std::uint32_t>(r));
      for (auto b : tr.terminal) out.put(static_cast<char>(b));
      for (auto b : tr.valid) out.put(static_cast<char>(b));
    }
}

int cmd_dump_games(const Options& o) {
  if (!o.trajectories.empty()) {
    // Rollouts at the training temperature and horizon; a fresh network
    // seeded from the run seed when no checkpoint is given.
    bad::config::RunConfig rc;
    std::optional<bad::nn::Mlp<float>> net;
    if (!o.checkpoint.empty()) {
      auto ck = open_checkpoint(o.checkpoint);
      rc = hanabi_config_for(ck, o);
      net = std::move(ck.net);
    } else {
      rc = load_config(o);
      const bad::pubmdp::HanabiEncoder enc(rc.game, rc.run.horizon);
      net.emplace(bad::train::hanabi_network_shape(enc, rc.train.hidden_layers), bad::hash_combine(rc.run.seed, 0x6e6574ULL));
    }
    if (o.games) rc.run.eval_games = *o.games;
    banner("dump-games", rc);
    bad::rollout::AgentSpec spec;
    spec.variant = bad::pubmdp::parse_variant(rc.run.variant);
    spec.belief = rc.belief;
    spec.sample_count = rc.belief.sample_count;
    spec.inv_temp = rc.train.train_inv_temp;
    spec.horizon = rc.run.horizon;
    bad::rollout::EpisodeOptions eo;
    eo.trajectories = true;
    eo.trajectory_length = rc.run.horizon;
    const auto eps = bad::eval::play_games<float>(rc.game, &*net, spec, rc.run.eval_games, rc.run.seed,
                                                  rc.run.workers, eo, rc.run.horizon);
    write_trajectories(o.trajectories, eps);
    std::cout << json{{"trajectories", o.trajectories}, {"episodes", eps.size()}}.dump() << "\n";
    return 0;
  }
  auto ps = policy_source(o);
  if (o.games) ps.rc.run.eval_games = *o.games;
  banner("dump-games", ps.rc);
  const auto spec = eval_spec(ps.rc, o.policy == "random");
  const auto games = bad::eval::transcript_dump<float>(ps.rc.game, ps.net ? &*ps.net : nullptr, spec,
                                                       ps.rc.run.eval_games, ps.rc.run.seed, !o.no_beliefs,
                                                       ps.rc.run.workers, ps.rc.run.horizon);
  ensure_dir(o.out);
  const auto path = out_path(o.out, "transcripts.jsonl");
  std::ofstream out(path);
  for (const auto& g : games) out << g.dump() << "\n";
  const auto conv = bad::eval::convention_statistic(games);
  std::cout << json{{"transcripts", path},
                    {"games", games.size()},
                    {"colour_hints", conv.colour_hints},
                    {"colour_hint_then_newest_play", conv.fraction()}}
                   .dump()
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian action decoder laboratory"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Run configuration (JSON)");
    sub->add_option("--seed", o.seed, "Override run.seed");
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--workers", o.workers, "Worker threads");
  };
  auto evalish = [&](CLI::App* sub) {
    common(sub);
    sub->add_option("--checkpoint", o.checkpoint, "Checkpoint file");
    sub->add_option("--games", o.games, "Number of games");
    sub->add_flag("--strict", o.strict, "Score zero when all lives are lost");
    sub->add_option("--belief", o.belief, "Belief variant v0|v1|v2")->check(CLI::IsMember({"v0", "v1", "v2"}));
    sub->add_option("--policy", o.policy, "network (default) or random")->check(CLI::IsMember({"network", "random"}));
  };

  auto* tm = app.add_subcommand("train-matrix", "Train an agent on the two-step matrix game");
  common(tm);
  tm->add_flag("--cf-gradients", o.cf_gradients, "Counterfactual policy gradients");
  tm->add_option("--agent", o.agent, "bad or vanilla")->check(CLI::IsMember({"bad", "vanilla"}));
  tm->add_option("--payoff", o.payoff, "Payoff tensor (JSON)");

  auto* th = app.add_subcommand("train-hanabi", "Train a Hanabi agent");
  common(th);
  th->add_option("--belief", o.belief, "Belief variant v0|v1|v2")->check(CLI::IsMember({"v0", "v1", "v2"}));
  th->add_option("--steps", o.steps, "Override run.total_steps");

  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint");
  evalish(ev);
  auto* br = app.add_subcommand("belief-report", "Per-timestep belief cross-entropy CSV");
  evalish(br);
  auto* dg = app.add_subcommand("dump-games", "Write game transcripts (JSONL)");
  evalish(dg);
  dg->add_flag("--no-beliefs", o.no_beliefs, "Omit per-turn belief tables");
  dg->add_option("--trajectories", o.trajectories, "Write training-style trajectories to this file instead");

  auto* orc = app.add_subcommand("oracle", "Brute-force optimal value of a matrix payoff");
  orc->add_option("--payoff", o.payoff, "Payoff tensor (JSON)");
  orc->add_option("--config", o.config, "Run configuration (JSON)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (tm->parsed()) return cmd_train_matrix(o);
    if (th->parsed()) return cmd_train_hanabi(o);
    if (ev->parsed()) return cmd_eval(o);
    if (br->parsed()) return cmd_belief_report(o);
    if (dg->parsed()) return cmd_dump_games(o);
    if (orc->parsed()) return cmd_oracle(o);
  } catch (const MissingCheckpoint& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const bad::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const bad::CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
