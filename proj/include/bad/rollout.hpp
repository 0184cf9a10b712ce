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

// Hanabi episodes under the public-belief MDP: every turn the actor's partial
// policy is sampled from the network with the common per-step seed, realised
// on the actor's private observation, and folded into the public belief.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bad/belief.hpp"
#include "bad/error.hpp"
#include "bad/game.hpp"
#include "bad/learner.hpp"
#include "bad/nn.hpp"
#include "bad/pubmdp.hpp"
#include "bad/rng.hpp"

namespace bad::rollout {

inline constexpr std::uint64_t kDealTag = 0x6465616cULL;
inline constexpr std::uint64_t kSampleTag = 0x73616d70ULL;
inline constexpr std::uint64_t kRandomTag = 0x72616e64ULL;

inline std::uint64_t deal_seed(std::uint64_t episode_seed) { return hash_combine(episode_seed, kDealTag); }

struct AgentSpec {
  pubmdp::BeliefVariant variant = pubmdp::BeliefVariant::kV2;
  belief::BeliefConfig belief;
  int sample_count = 3000;
  double inv_temp = 1.0;
  int horizon = 65;  // turns before truncation; 0 plays to the natural end
  bool random_policy = false;
};

struct EpisodeOptions {
  bool trajectories = false;
  int trajectory_length = 65;
  bool cross_entropy = false;
  bool transcript = false;
  bool transcript_beliefs = false;
};

struct TurnRecord {
  int turn = 0;
  int actor = 0;
  int action_index = 0;
  hanabi::Action action;
  int reward = 0;
  bool terminal = false;
  std::uint64_t hash_before = 0;
  std::uint64_t hash_after = 0;
  std::vector<int> fireworks;
  int hint_tokens = 0;
  int life_tokens = 0;
  int deck_remaining = 0;
  std::vector<int> true_columns;  // player-major, pre-action
  std::vector<int> slot_age;      // turns since each slot was filled
  std::vector<std::uint8_t> hinted_before;  // any hint bit set on the slot
  std::array<double, 3> ce{0.0, 0.0, 0.0};
  std::optional<std::array<belief::FactorisedBelief, 3>> beliefs;  // v0, v1, v2
};

struct EpisodeResult {
  std::uint64_t episode_seed = 0;
  int score = 0;         // under the configured scoring rule
  int raw_score = 0;     // sum of firework heights
  int strict_score = 0;  // zero when every life token was lost
  int turns = 0;
  bool truncated = false;
  std::vector<learn::Trajectory> trajectories;
  std::vector<std::array<double, 3>> ce;  // per turn: v0, v1, v2
  std::vector<TurnRecord> log;
  long likelihood_updates = 0;
  long empty_sample_events = 0;
  long short_sample_events = 0;
};

namespace detail {

template <class S>
void fill_step(learn::Trajectory& tr, int t, const pubmdp::HanabiEncoder& enc,
               const hanabi::PublicFeatures& pub, const belief::FactorisedBelief& b, int agent,
               std::span<const std::uint8_t> joint, std::span<const std::uint8_t> legal, int action) {
  float* x = tr.input(t);
  enc.encode_public<float>(pub, b, agent, x);
  const auto vis = enc.visible_columns(joint, agent);
  enc.encode_cards<float>(vis, x + enc.private_offset());
  const auto own = enc.own_columns(joint, agent);
  enc.encode_cards<float>(own, x + enc.own_offset());
  std::copy(legal.begin(), legal.end(), tr.legal_row(t));
  tr.actions[static_cast<std::size_t>(t)] = action;
  tr.valid[static_cast<std::size_t>(t)] = 1;
}

}  // namespace detail

// Plays one episode. `net` may be null only for the uniform random policy.
template <class S>
EpisodeResult play_episode(const hanabi::GameConfig& cfg, const pubmdp::HanabiEncoder& enc,
                           const nn::Mlp<S>* net, const AgentSpec& spec, std::uint64_t episode_seed,
                           const EpisodeOptions& opt = {}) {
  if (!net && !spec.random_policy) throw ConfigError("play_episode needs a network");
  if (opt.trajectories && (spec.horizon <= 0 || opt.trajectory_length < spec.horizon))
    throw ConfigError("trajectories need a horizon no longer than the trajectory length");
  using pubmdp::BeliefVariant;
  const bool bayes = spec.variant == BeliefVariant::kV2 && !spec.random_policy;
  const bool need_v1 = spec.variant != BeliefVariant::kV0 || opt.cross_entropy || opt.transcript;

  EpisodeResult res;
  res.episode_seed = episode_seed;
  hanabi::GameState state = hanabi::new_game(cfg, deal_seed(episode_seed));
  hanabi::PublicFeatures pub = hanabi::public_features(state);
  pubmdp::BeliefSet beliefs = pubmdp::initial_beliefs(pub, spec.belief, bayes, need_v1);
  Rng random_rng(hash_combine(episode_seed, kRandomTag));
  const int na = cfg.num_actions();
  const int slots = cfg.num_slots();

  if (opt.trajectories)
    res.trajectories.assign(static_cast<std::size_t>(cfg.n_players),
                            learn::Trajectory(opt.trajectory_length, enc.input_size(), na,
                                              enc.own_offset(), enc.own_size()));

  int t = 0;
  std::vector<S> x_pub(static_cast<std::size_t>(enc.public_size()));
  std::vector<S> x_priv(static_cast<std::size_t>(enc.private_size()));
  while (!state.is_terminal() && (spec.horizon <= 0 || t < spec.horizon)) {
    const int actor = state.current_player();
    const auto joint = pubmdp::joint_columns(state);
    const auto& b = beliefs.get(spec.variant);
    const auto legal = state.legal_mask(actor);

    std::array<double, 3> ce{0.0, 0.0, 0.0};
    if (opt.cross_entropy || opt.transcript) {
      const auto truth = hanabi::true_columns(state);
      ce = {belief::cross_entropy(beliefs.v0, truth), belief::cross_entropy(beliefs.v1, truth),
            belief::cross_entropy(beliefs.v2, truth)};
      if (opt.cross_entropy) res.ce.push_back(ce);
    }

    int u = 0;
    std::optional<pubmdp::PartialPolicy<S>> pp;
    const auto vis = enc.visible_columns(joint, actor);
    if (spec.random_policy) {
      std::vector<int> options;
      for (int a = 0; a < na; ++a)
        if (legal[static_cast<std::size_t>(a)]) options.push_back(a);
      u = options[static_cast<std::size_t>(random_rng.below(options.size()))];
    } else {
      enc.encode_public<S>(pub, b, actor, x_pub.data());
      pp.emplace(*net, x_pub, pubmdp::step_seed(episode_seed, t), spec.inv_temp);
      enc.encode_cards<S>(vis, x_priv.data());
      u = pp->act(x_priv, vis, legal);
    }
    const hanabi::Action action = hanabi::action_from_index(cfg, actor, u);

    if (opt.trajectories) {
      for (int a = 0; a < cfg.n_players; ++a) {
        const auto mask = a == actor ? legal : state.legal_mask(a);
        detail::fill_step<S>(res.trajectories[static_cast<std::size_t>(a)], t, enc, pub, b, a, joint, mask,
                             a == actor ? u : cfg.no_action_index());
      }
    }

    TurnRecord rec;
    if (opt.transcript) {
      rec.turn = t;
      rec.actor = actor;
      rec.action_index = u;
      rec.action = action;
      rec.hash_before = hanabi::state_hash(state);
      rec.fireworks = state.fireworks();
      rec.hint_tokens = state.hint_tokens();
      rec.life_tokens = state.life_tokens();
      rec.deck_remaining = state.deck_remaining();
      rec.true_columns = hanabi::true_columns(state);
      rec.slot_age.resize(static_cast<std::size_t>(slots));
      rec.hinted_before.resize(static_cast<std::size_t>(slots));
      const auto& hm = state.hint_mask();
      for (int i = 0; i < slots; ++i) {
        rec.slot_age[static_cast<std::size_t>(i)] = t - state.slot_fill_turn()[static_cast<std::size_t>(i)];
        int ones = 0;
        for (int c = 0; c < cfg.num_card_types(); ++c) ones += hm.at(i, c);
        const bool empty = hm.at(i, cfg.null_column()) != 0;
        rec.hinted_before[static_cast<std::size_t>(i)] = (!empty && ones < cfg.num_card_types()) ? 1 : 0;
      }
      rec.ce = ce;
      if (opt.transcript_beliefs) rec.beliefs = std::array<belief::FactorisedBelief, 3>{beliefs.v0, beliefs.v1, beliefs.v2};
    }

    const auto outcome = state.apply(action);
    const hanabi::PublicFeatures after = hanabi::public_features(state);

    if (bayes) {
      const std::uint64_t sample_seed = hash_combine(pubmdp::step_seed(episode_seed, t), kSampleTag);
      const auto samples = belief::sample_hands(beliefs.v2, pub.candidates, spec.sample_count,
                                                spec.belief.oversample_factor, sample_seed);
      // Realise the partial policy on every distinct sampled observation at once.
      std::vector<std::vector<std::uint8_t>> keys, masks;
      std::unordered_map<std::string, int> queued;
      for (int i = 0; i < samples.accepted; ++i) {
        auto v = enc.visible_columns(samples.hand(i), actor);
        if (pp->lookup(v)) continue;
        std::string k(reinterpret_cast<const char*>(v.data()), v.size());
        if (queued.count(k)) continue;
        queued.emplace(std::move(k), 0);
        masks.push_back(pubmdp::legal_mask_for_joint(cfg, pub, actor, samples.hand(i)));
        keys.push_back(std::move(v));
      }
      if (!keys.empty()) {
        nn::Matrix<S> encs(enc.private_size(), static_cast<long>(keys.size()));
        for (std::size_t j = 0; j < keys.size(); ++j)
          enc.encode_cards<S>(keys[j], encs.col(static_cast<long>(j)).data());
        pp->act_batch(encs, keys, masks);
      }
      auto policy = [&](std::span<const std::uint8_t> hand) -> int {
        const auto v = enc.visible_columns(hand, actor);
        if (auto hit = pp->lookup(v)) return *hit;
        enc.encode_cards<S>(v, x_priv.data());
        return pp->act(x_priv, v, pubmdp::legal_mask_for_joint(cfg, pub, actor, hand));
      };
      pubmdp::TransitionReport rep;
      beliefs = pubmdp::public_belief_transition(beliefs, pub, after, cfg, policy, u, action, actor,
                                                 spec.belief, spec.sample_count, sample_seed, &rep,
                                                 &samples);
      if (rep.likelihood_applied) ++res.likelihood_updates;
      if (samples.empty()) ++res.empty_sample_events;
      else if (!samples.complete()) ++res.short_sample_events;
    } else {
      beliefs = pubmdp::refresh_beliefs(after, beliefs.likelihood, spec.belief, false, need_v1);
    }

    if (opt.trajectories)
      for (auto& tr : res.trajectories) {
        tr.rewards[static_cast<std::size_t>(t)] = static_cast<float>(outcome.reward);
        tr.terminal[static_cast<std::size_t>(t)] = outcome.terminal ? 1 : 0;
      }
    if (opt.transcript) {
      rec.reward = outcome.reward;
      rec.terminal = outcome.terminal;
      rec.hash_after = hanabi::state_hash(state);
      res.log.push_back(std::move(rec));
    }
    pub = after;
    ++t;
  }

  res.turns = t;
  res.truncated = !state.is_terminal();
  res.raw_score = state.raw_score();
  res.strict_score = state.life_tokens() == 0 ? 0 : res.raw_score;
  res.score = state.score();
  return res;
}

}  // namespace bad::rollout
