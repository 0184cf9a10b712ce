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

// Score statistics, belief-quality curves and game transcripts.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bad/error.hpp"
#include "bad/game.hpp"
#include "bad/nn.hpp"
#include "bad/pubmdp.hpp"
#include "bad/rollout.hpp"
#include "bad/train.hpp"

namespace bad::eval {

using nlohmann::json;

struct ScoreStats {
  int n_games = 0;
  double mean = 0.0;  // under the configured scoring rule
  double sd = 0.0;
  double sem = 0.0;
  double raw_mean = 0.0;
  double strict_mean = 0.0;
  double strict_sem = 0.0;
  double perfect_fraction = 0.0;
  std::vector<int> histogram;         // index = score, configured rule
  std::vector<int> strict_histogram;  // index = score, strict rule
  std::vector<int> scores;            // per game, configured rule
  std::vector<int> strict_scores;
  long truncated = 0;
  long empty_sample_events = 0;
};

// Mean, sample standard deviation and sem of a series.
struct Moments {
  double mean = 0.0, sd = 0.0, sem = 0.0;
  long n = 0;
};

template <class T>
Moments moments(const std::vector<T>& xs) {
  Moments m;
  m.n = static_cast<long>(xs.size());
  if (xs.empty()) return m;
  double s = 0.0;
  for (auto x : xs) s += static_cast<double>(x);
  m.mean = s / m.n;
  double ss = 0.0;
  for (auto x : xs) ss += (static_cast<double>(x) - m.mean) * (static_cast<double>(x) - m.mean);
  m.sd = m.n > 1 ? std::sqrt(ss / (m.n - 1)) : 0.0;
  m.sem = m.sd / std::sqrt(static_cast<double>(m.n));
  return m;
}

inline ScoreStats score_stats(const hanabi::GameConfig& cfg, const std::vector<rollout::EpisodeResult>& eps) {
  ScoreStats st;
  st.n_games = static_cast<int>(eps.size());
  st.histogram.assign(static_cast<std::size_t>(cfg.max_score() + 1), 0);
  st.strict_histogram.assign(static_cast<std::size_t>(cfg.max_score() + 1), 0);
  int perfect = 0;
  double raw = 0.0;
  for (const auto& e : eps) {
    st.scores.push_back(e.score);
    st.strict_scores.push_back(e.strict_score);
    ++st.histogram[static_cast<std::size_t>(e.score)];
    ++st.strict_histogram[static_cast<std::size_t>(e.strict_score)];
    raw += e.raw_score;
    if (e.raw_score == cfg.max_score()) ++perfect;
    if (e.truncated) ++st.truncated;
    st.empty_sample_events += e.empty_sample_events;
  }
  const auto m = moments(st.scores);
  const auto ms = moments(st.strict_scores);
  st.mean = m.mean;
  st.sd = m.sd;
  st.sem = m.sem;
  st.strict_mean = ms.mean;
  st.strict_sem = ms.sem;
  st.raw_mean = eps.empty() ? 0.0 : raw / static_cast<double>(eps.size());
  st.perfect_fraction = eps.empty() ? 0.0 : static_cast<double>(perfect) / static_cast<double>(eps.size());
  return st;
}

inline std::uint64_t game_seed(std::uint64_t seed, int game) {
  return hash_combine(hash_combine(seed, 0x6576616cULL), static_cast<std::uint64_t>(game));
}

// Self-play over `games` fresh seeds; both scoring rules in one pass.
template <class S>
std::vector<rollout::EpisodeResult> play_games(const hanabi::GameConfig& cfg, const nn::Mlp<S>* net,
                                               const rollout::AgentSpec& spec, int games, std::uint64_t seed,
                                               int workers, const rollout::EpisodeOptions& opt = {},
                                               int encoder_horizon = 65) {
  const pubmdp::HanabiEncoder enc(cfg, encoder_horizon);
  std::vector<rollout::EpisodeResult> eps(static_cast<std::size_t>(games));
  train::parallel_for(games, workers, [&](int g) {
    eps[static_cast<std::size_t>(g)] = rollout::play_episode<S>(cfg, enc, net, spec, game_seed(seed, g), opt);
  });
  return eps;
}

template <class S>
ScoreStats evaluate(const hanabi::GameConfig& cfg, const nn::Mlp<S>* net, const rollout::AgentSpec& spec,
                    int games, std::uint64_t seed, int workers = 1, int encoder_horizon = 65) {
  return score_stats(cfg, play_games(cfg, net, spec, games, seed, workers, {}, encoder_horizon));
}

struct CeRow {
  int t = 0;
  double ce_v0 = 0.0, ce_v1 = 0.0, ce_v2 = 0.0;
  long n = 0;
};

struct BeliefReport {
  std::vector<CeRow> rows;                      // per timestep
  std::vector<std::array<double, 3>> per_game;  // mean CE per game: v0, v1, v2
};

template <class S>
BeliefReport belief_quality_report(const hanabi::GameConfig& cfg, const nn::Mlp<S>* net,
                                   const rollout::AgentSpec& spec, int games, std::uint64_t seed,
                                   int workers = 1, int encoder_horizon = 65) {
  rollout::EpisodeOptions opt;
  opt.cross_entropy = true;
  const auto eps = play_games(cfg, net, spec, games, seed, workers, opt, encoder_horizon);
  BeliefReport rep;
  for (const auto& e : eps) {
    std::array<double, 3> mean{0.0, 0.0, 0.0};
    for (std::size_t t = 0; t < e.ce.size(); ++t) {
      if (rep.rows.size() <= t) rep.rows.push_back(CeRow{static_cast<int>(t)});
      auto& row = rep.rows[t];
      row.ce_v0 += e.ce[t][0];
      row.ce_v1 += e.ce[t][1];
      row.ce_v2 += e.ce[t][2];
      ++row.n;
      for (int k = 0; k < 3; ++k) mean[static_cast<std::size_t>(k)] += e.ce[t][static_cast<std::size_t>(k)];
    }
    if (!e.ce.empty()) {
      for (auto& m : mean) m /= static_cast<double>(e.ce.size());
      rep.per_game.push_back(mean);
    }
  }
  for (auto& row : rep.rows) {
    row.ce_v0 /= static_cast<double>(row.n);
    row.ce_v1 /= static_cast<double>(row.n);
    row.ce_v2 /= static_cast<double>(row.n);
  }
  return rep;
}

inline void write_ce_csv(std::ostream& out, const BeliefReport& rep) {
  out << "t,ce_v0,ce_v1,ce_v2,n\n";
  out << std::setprecision(8);
  for (const auto& r : rep.rows) out << r.t << ',' << r.ce_v0 << ',' << r.ce_v1 << ',' << r.ce_v2 << ',' << r.n << '\n';
}

// ---------------------------------------------------------------------------
// Transcripts: one JSON object per game and line.

inline constexpr int kTranscriptSchema = 1;

inline json belief_json(const belief::FactorisedBelief& b) {
  json rows = json::array();
  for (int i = 0; i < b.slots(); ++i) {
    json row = json::array();
    for (int c = 0; c < b.cols(); ++c) row.push_back(std::round(b.probs(i, c) * 1e6) / 1e6);
    rows.push_back(row);
  }
  return rows;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

inline json transcript_json(const hanabi::GameConfig& cfg, const rollout::EpisodeResult& e,
                            const json& game_config) {
  json g;
  g["schema_version"] = kTranscriptSchema;
  g["episode_seed"] = e.episode_seed;
  g["deal_seed"] = rollout::deal_seed(e.episode_seed);
  g["config"] = game_config;
  g["score"] = e.score;
  g["raw_score"] = e.raw_score;
  g["strict_score"] = e.strict_score;
  g["truncated"] = e.truncated;
  json turns = json::array();
  for (const auto& r : e.log) {
    json t;
    t["turn"] = r.turn;
    t["actor"] = r.actor;
    t["action"] = hanabi::to_string(r.action);
    t["action_index"] = r.action_index;
    t["reward"] = r.reward;
    t["terminal"] = r.terminal;
    t["hash_before"] = hex64(r.hash_before);
    t["hash_after"] = hex64(r.hash_after);
    t["fireworks"] = r.fireworks;
    t["hint_tokens"] = r.hint_tokens;
    t["life_tokens"] = r.life_tokens;
    t["deck_remaining"] = r.deck_remaining;
    json hands = json::array();
    for (int p = 0; p < cfg.n_players; ++p) {
      json hand = json::array();
      for (int s = 0; s < cfg.hand(); ++s) {
        const int col = r.true_columns[static_cast<std::size_t>(p * cfg.hand() + s)];
        hand.push_back(col == cfg.null_column() ? std::string("--")
                                                : hanabi::to_string(cfg, hanabi::card_from_column(cfg, col)));
      }
      hands.push_back(hand);
    }
    t["hands"] = hands;
    t["slot_age"] = r.slot_age;
    t["hinted"] = r.hinted_before;
    t["ce"] = {r.ce[0], r.ce[1], r.ce[2]};
    if (r.beliefs) t["beliefs"] = {{"v0", belief_json((*r.beliefs)[0])},
                                   {"v1", belief_json((*r.beliefs)[1])},
                                   {"v2", belief_json((*r.beliefs)[2])}};
    turns.push_back(std::move(t));
  }
  g["turns"] = std::move(turns);
  return g;
}

template <class S>
std::vector<json> transcript_dump(const hanabi::GameConfig& cfg, const nn::Mlp<S>* net,
                                  const rollout::AgentSpec& spec, int games, std::uint64_t seed,
                                  bool with_beliefs = true, int workers = 1, int encoder_horizon = 65) {
  rollout::EpisodeOptions opt;
  opt.transcript = true;
  opt.transcript_beliefs = with_beliefs;
  const auto eps = play_games(cfg, net, spec, games, seed, workers, opt, encoder_horizon);
  std::vector<json> out;
  out.reserve(eps.size());
  const json gj = {{"n_color", cfg.n_color},
                   {"n_rank", cfg.n_rank},
                   {"n_players", cfg.n_players},
                   {"hand_size", cfg.hand()},
                   {"max_hint_tokens", cfg.max_hint_tokens},
                   {"max_life_tokens", cfg.max_life_tokens},
                   {"allow_discard_at_max_hints", cfg.allow_discard_at_max_hints},
                   {"strict_scoring", cfg.strict_scoring}};
  for (const auto& e : eps) out.push_back(transcript_json(cfg, e, gj));
  return out;
}

// Structural check of one transcript line; returns an empty string when valid.
inline std::string validate_transcript(const json& g) {
  auto need = [&](const json& obj, const char* key, auto pred) -> std::string {
    if (!obj.contains(key)) return std::string("missing ") + key;
    if (!pred(obj.at(key))) return std::string("bad type for ") + key;
    return {};
  };
  const auto is_int = [](const json& v) { return v.is_number_integer(); };
  const auto is_str = [](const json& v) { return v.is_string(); };
  const auto is_arr = [](const json& v) { return v.is_array(); };
  const auto is_obj = [](const json& v) { return v.is_object(); };
  const auto is_bool = [](const json& v) { return v.is_boolean(); };
  for (auto err : {need(g, "schema_version", is_int), need(g, "episode_seed", is_int), need(g, "deal_seed", is_int),
                   need(g, "config", is_obj), need(g, "score", is_int), need(g, "truncated", is_bool),
                   need(g, "turns", is_arr)})
    if (!err.empty()) return err;
  if (g["schema_version"].get<int>() != kTranscriptSchema) return "unknown schema_version";
  for (const auto& t : g["turns"]) {
    for (auto err : {need(t, "turn", is_int), need(t, "actor", is_int), need(t, "action", is_str),
                     need(t, "action_index", is_int), need(t, "reward", is_int), need(t, "hash_before", is_str),
                     need(t, "hash_after", is_str), need(t, "hands", is_arr), need(t, "slot_age", is_arr),
                     need(t, "ce", is_arr)})
      if (!err.empty()) return "turn " + std::to_string(t.value("turn", -1)) + ": " + err;
  }
  return {};
}

// Replays a transcript through the engine; returns an empty string when every
// recorded state hash is reproduced.
inline std::string replay_transcript(const json& g) {
  const auto cfg = [&] {
    hanabi::GameConfig c;
    const auto& j = g.at("config");
    c.n_color = j.at("n_color").get<int>();
    c.n_rank = j.at("n_rank").get<int>();
    c.n_players = j.at("n_players").get<int>();
    c.hand_size = j.at("hand_size").get<int>();
    c.max_hint_tokens = j.at("max_hint_tokens").get<int>();
    c.max_life_tokens = j.at("max_life_tokens").get<int>();
    c.allow_discard_at_max_hints = j.at("allow_discard_at_max_hints").get<bool>();
    c.strict_scoring = j.at("strict_scoring").get<bool>();
    return c;
  }();
  hanabi::GameState s = hanabi::new_game(cfg, g.at("deal_seed").get<std::uint64_t>());
  for (const auto& t : g.at("turns")) {
    const int turn = t.at("turn").get<int>();
    if (hex64(hanabi::state_hash(s)) != t.at("hash_before").get<std::string>())
      return "state hash mismatch before turn " + std::to_string(turn);
    const auto action = hanabi::action_from_index(cfg, s.current_player(), t.at("action_index").get<int>());
    if (hanabi::to_string(action) != t.at("action").get<std::string>())
      return "action mismatch at turn " + std::to_string(turn);
    try {
      s.apply(action);
    } catch (const Error& e) {
      return "turn " + std::to_string(turn) + ": " + e.what();
    }
    if (hex64(hanabi::state_hash(s)) != t.at("hash_after").get<std::string>())
      return "state hash mismatch after turn " + std::to_string(turn);
  }
  if (s.score() != g.at("score").get<int>()) return "final score mismatch";
  return {};
}

struct ConventionStats {
  long colour_hints = 0;
  long followed_by_newest_play = 0;
  double fraction() const {
    return colour_hints > 0 ? static_cast<double>(followed_by_newest_play) / static_cast<double>(colour_hints) : 0.0;
  }
};

// Fraction of colour hints after which the hinted player's next action plays
// their newest card.
inline ConventionStats convention_statistic(const std::vector<json>& games) {
  ConventionStats st;
  for (const auto& g : games) {
    const int hand = g.at("config").at("hand_size").get<int>();
    const auto& turns = g.at("turns");
    for (std::size_t i = 0; i < turns.size(); ++i) {
      const std::string a = turns[i].at("action").get<std::string>();
      if (a.rfind("hint_color", 0) != 0) continue;
      ++st.colour_hints;
      const int target = std::stoi(a.substr(a.find("(p") + 2));
      for (std::size_t k = i + 1; k < turns.size(); ++k) {
        if (turns[k].at("actor").get<int>() != target) continue;
        const std::string b = turns[k].at("action").get<std::string>();
        if (b.rfind("play", 0) == 0) {
          const int slot = std::stoi(b.substr(5));
          const auto& age = turns[k].at("slot_age");
          int newest = -1, best = 1 << 30;
          for (int s = 0; s < hand; ++s) {
            const int v = age[static_cast<std::size_t>(target * hand + s)].get<int>();
            if (turns[k].at("hands")[static_cast<std::size_t>(target)][static_cast<std::size_t>(s)] == "--") continue;
            if (v < best) {
              best = v;
              newest = s;
            }
          }
          if (slot == newest) ++st.followed_by_newest_play;
        }
        break;
      }
    }
  }
  return st;
}

}  // namespace bad::eval
