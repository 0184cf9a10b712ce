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

#pragma once

// Run configuration files: {"game", "belief", "train", "run", "matrix"}.
// Every section is optional; unknown keys are rejected.

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bad/belief.hpp"
#include "bad/error.hpp"
#include "bad/game.hpp"
#include "bad/learner.hpp"
#include "bad/pubmdp.hpp"

namespace bad::config {

using nlohmann::json;

struct RunSection {
  std::string variant = "v2";
  int horizon = 65;
  long total_steps = 1000000;
  std::uint64_t seed = 1;
  int workers = 1;
  long log_every = 50;
  int eval_games = 10000;
  double eval_inv_temp = 100.0;
  int eval_horizon = 0;  // 0 plays evaluation games to their natural end
};

struct MatrixSection {
  std::string payoff = "fixtures/matrix_payoff.json";
  std::string agent = "bad";
  long updates = 10000;
  long eval_every = 500;
  int eval_games = 1000;
};

struct RunConfig {
  hanabi::GameConfig game;
  belief::BeliefConfig belief;
  learn::TrainConfig train;
  RunSection run;
  MatrixSection matrix;

  void validate() const {
    game.validate();
    belief.validate();
    train.validate();
    pubmdp::parse_variant(run.variant);
    if (run.horizon < 1) throw ConfigError("run.horizon must be >= 1");
    if (run.total_steps < 0) throw ConfigError("run.total_steps must be >= 0");
    if (run.workers < 1) throw ConfigError("run.workers must be >= 1");
    if (run.eval_games < 1) throw ConfigError("run.eval_games must be >= 1");
    if (!(run.eval_inv_temp > 0.0)) throw ConfigError("run.eval_inv_temp must be > 0");
    if (run.eval_horizon < 0) throw ConfigError("run.eval_horizon must be >= 0");
    if (matrix.agent != "bad" && matrix.agent != "vanilla")
      throw ConfigError("matrix.agent must be 'bad' or 'vanilla'");
    if (matrix.updates < 0) throw ConfigError("matrix.updates must be >= 0");
    if (matrix.eval_every < 0) throw ConfigError("matrix.eval_every must be >= 0");
    if (matrix.eval_games < 1) throw ConfigError("matrix.eval_games must be >= 1");
  }
};

namespace detail {

// Reads `key` from `obj` into `out` when present, tracking which keys were used.
class Reader {
 public:
  Reader(const json& obj, std::string section) : obj_(obj), section_(std::move(section)) {
    if (!obj_.is_object()) throw ConfigError("section '" + section_ + "' must be an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end()) return;
    try {
      out = it->get<T>();
    } catch (const json::exception&) {
      throw ConfigError(section_ + "." + key + " has the wrong type");
    }
  }

  void get_optional_int(const char* key, std::optional<int>& out) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end() || it->is_null()) return;
    if (!it->is_number_integer()) throw ConfigError(section_ + "." + key + " must be an integer or null");
    out = it->get<int>();
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError("unknown key '" + section_ + "." + it.key() + "'");
  }

 private:
  const json& obj_;
  std::string section_;
  std::set<std::string> seen_;
};

}  // namespace detail

inline RunConfig from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  RunConfig c;
  for (auto it = j.begin(); it != j.end(); ++it)
    if (it.key() != "game" && it.key() != "belief" && it.key() != "train" && it.key() != "run" &&
        it.key() != "matrix")
      throw ConfigError("unknown section '" + it.key() + "'");
  if (j.contains("game")) {
    detail::Reader r(j["game"], "game");
    r.get("n_color", c.game.n_color);
    r.get("n_rank", c.game.n_rank);
    r.get("n_players", c.game.n_players);
    r.get_optional_int("hand_size", c.game.hand_size);
    r.get("max_hint_tokens", c.game.max_hint_tokens);
    r.get("max_life_tokens", c.game.max_life_tokens);
    r.get("allow_discard_at_max_hints", c.game.allow_discard_at_max_hints);
    r.get("strict_scoring", c.game.strict_scoring);
    r.finish();
  }
  if (j.contains("belief")) {
    detail::Reader r(j["belief"], "belief");
    r.get("iterations", c.belief.iterations);
    r.get("v1_mixin", c.belief.v1_mixin);
    r.get("sample_count", c.belief.sample_count);
    r.get("eval_sample_count", c.belief.eval_sample_count);
    r.get("oversample_factor", c.belief.oversample_factor);
    r.get("likelihood_floor", c.belief.likelihood_floor);
    r.get("damping", c.belief.damping);
    r.finish();
  }
  if (j.contains("train")) {
    detail::Reader r(j["train"], "train");
    auto& t = c.train;
    r.get("batch_size", t.batch_size);
    r.get("gamma", t.gamma);
    r.get("baseline_weight", t.baseline_weight);
    r.get("entropy_weight", t.entropy_weight);
    r.get("learning_rate", t.learning_rate);
    r.get("optimizer", t.optimizer);
    r.get("rms_epsilon", t.rms_epsilon);
    r.get("rms_momentum", t.rms_momentum);
    r.get("rms_decay", t.rms_decay);
    r.get("adam_epsilon", t.adam_epsilon);
    r.get("clip_norm", t.clip_norm);
    r.get("cf_gradients", t.cf_gradients);
    r.get("hidden_layers", t.hidden_layers);
    r.get("train_inv_temp", t.train_inv_temp);
    r.get("eval_inv_temp", t.eval_inv_temp);
    r.get("population_size", t.population_size);
    r.get("evolve_interval", t.evolve_interval);
    r.get("rating_ema", t.rating_ema);
    r.get("pbt_threshold", t.pbt_threshold);
    r.get("pbt_warmup_fraction", t.pbt_warmup_fraction);
    r.finish();
  }
  if (j.contains("run")) {
    detail::Reader r(j["run"], "run");
    r.get("variant", c.run.variant);
    r.get("horizon", c.run.horizon);
    r.get("total_steps", c.run.total_steps);
    r.get("seed", c.run.seed);
    r.get("workers", c.run.workers);
    r.get("log_every", c.run.log_every);
    r.get("eval_games", c.run.eval_games);
    r.get("eval_inv_temp", c.run.eval_inv_temp);
    r.get("eval_horizon", c.run.eval_horizon);
    r.finish();
  }
  if (j.contains("matrix")) {
    detail::Reader r(j["matrix"], "matrix");
    r.get("payoff", c.matrix.payoff);
    r.get("agent", c.matrix.agent);
    r.get("updates", c.matrix.updates);
    r.get("eval_every", c.matrix.eval_every);
    r.get("eval_games", c.matrix.eval_games);
    r.finish();
  }
  c.validate();
  return c;
}

inline RunConfig load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  return from_json(j);
}

inline json game_json(const hanabi::GameConfig& g) {
  return {{"n_color", g.n_color},
          {"n_rank", g.n_rank},
          {"n_players", g.n_players},
          {"hand_size", g.hand()},
          {"max_hint_tokens", g.max_hint_tokens},
          {"max_life_tokens", g.max_life_tokens},
          {"allow_discard_at_max_hints", g.allow_discard_at_max_hints},
          {"strict_scoring", g.strict_scoring}};
}

inline json to_json(const RunConfig& c) {
  const auto& b = c.belief;
  const auto& t = c.train;
  return {{"game", game_json(c.game)},
          {"belief",
           {{"iterations", b.iterations},
            {"v1_mixin", b.v1_mixin},
            {"sample_count", b.sample_count},
            {"eval_sample_count", b.eval_sample_count},
            {"oversample_factor", b.oversample_factor},
            {"likelihood_floor", b.likelihood_floor},
            {"damping", b.damping}}},
          {"train",
           {{"batch_size", t.batch_size},
            {"gamma", t.gamma},
            {"baseline_weight", t.baseline_weight},
            {"entropy_weight", t.entropy_weight},
            {"learning_rate", t.learning_rate},
            {"optimizer", t.optimizer},
            {"rms_epsilon", t.rms_epsilon},
            {"rms_momentum", t.rms_momentum},
            {"rms_decay", t.rms_decay},
            {"adam_epsilon", t.adam_epsilon},
            {"clip_norm", t.clip_norm},
            {"cf_gradients", t.cf_gradients},
            {"hidden_layers", t.hidden_layers},
            {"train_inv_temp", t.train_inv_temp},
            {"eval_inv_temp", t.eval_inv_temp},
            {"population_size", t.population_size},
            {"evolve_interval", t.evolve_interval},
            {"rating_ema", t.rating_ema},
            {"pbt_threshold", t.pbt_threshold},
            {"pbt_warmup_fraction", t.pbt_warmup_fraction}}},
          {"run",
           {{"variant", c.run.variant},
            {"horizon", c.run.horizon},
            {"total_steps", c.run.total_steps},
            {"seed", c.run.seed},
            {"workers", c.run.workers},
            {"log_every", c.run.log_every},
            {"eval_games", c.run.eval_games},
            {"eval_inv_temp", c.run.eval_inv_temp},
            {"eval_horizon", c.run.eval_horizon}}},
          {"matrix",
           {{"payoff", c.matrix.payoff},
            {"agent", c.matrix.agent},
            {"updates", c.matrix.updates},
            {"eval_every", c.matrix.eval_every},
            {"eval_games", c.matrix.eval_games}}}};
}

inline hanabi::GameConfig game_from_json(const json& j) {
  json wrapped = {{"game", j}};
  return from_json(wrapped).game;
}

// The part of a configuration a trained Hanabi network depends on.
inline json hanabi_model_json(const RunConfig& c) {
  return {{"game", game_json(c.game)},
          {"variant", c.run.variant},
          {"horizon", c.run.horizon},
          {"hidden_layers", c.train.hidden_layers}};
}

}  // namespace bad::config
