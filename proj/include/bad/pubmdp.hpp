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

// Public-belief MDP machinery: partial policies realised from a shared seed,
// the Hanabi public-input encoding, and the public belief transition.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "bad/belief.hpp"
#include "bad/error.hpp"
#include "bad/game.hpp"
#include "bad/matrix_game.hpp"
#include "bad/nn.hpp"
#include "bad/rng.hpp"

namespace bad::pubmdp {

inline constexpr double kMaskedLogit = -1e9;

// Common-knowledge seed for timestep t of an episode.
inline std::uint64_t step_seed(std::uint64_t episode_seed, int t) {
  return hash_combine(episode_seed, static_cast<std::uint64_t>(t) + 1);
}

// softmax(inv_temp * logits) with illegal entries forced to kMaskedLogit.
template <class S>
std::vector<double> masked_softmax(std::span<const S> logits, std::span<const std::uint8_t> legal,
                                   double inv_temp) {
  const std::size_t n = logits.size();
  std::vector<double> z(n);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = inv_temp * (legal[i] ? static_cast<double>(logits[i]) : kMaskedLogit);
    top = std::max(top, z[i]);
  }
  double total = 0.0;
  for (auto& v : z) {
    v = std::exp(v - top);
    total += v;
  }
  for (auto& v : z) v /= total;
  return z;
}

// A deterministic map from private observations to actions, fixed by
// (network, public input, seed, inverse temperature). Each observation gets
// its own random stream keyed by hash(seed, observation key), so the same
// observation always yields the same action and the induced distribution over
// maps factorises across observations. Evaluations are memoised; not
// thread-safe.
template <class S>
class PartialPolicy {
 public:
  PartialPolicy(const nn::Mlp<S>& net, std::vector<S> public_input, std::uint64_t seed,
                double inv_temp)
      : net_(&net), public_input_(std::move(public_input)), seed_(seed), inv_temp_(inv_temp) {
    if (!(inv_temp > 0.0)) throw ConfigError("inverse temperature must be > 0");
    if (net.shape().hidden.empty()) throw ConfigError("partial policies need a hidden layer");
    const auto& w = net.params().tensors[0];
    const auto pub = static_cast<long>(public_input_.size());
    Eigen::Map<const nn::Vector<S>> x(public_input_.data(), pub);
    first_public_ = w.leftCols(pub) * x + net.params().tensors[1].col(0);
  }

  std::uint64_t seed() const { return seed_; }
  double inverse_temperature() const { return inv_temp_; }
  std::span<const S> public_input() const { return public_input_; }
  std::size_t cached() const { return cache_.size(); }

  std::optional<int> lookup(std::span<const std::uint8_t> key) const {
    auto it = cache_.find(std::string(reinterpret_cast<const char*>(key.data()), key.size()));
    if (it == cache_.end()) return std::nullopt;
    return it->second;
  }

  // Policy logits for a private encoding (the own-hand segment stays zero).
  std::vector<S> logits(std::span<const S> private_encoding) const {
    nn::Matrix<S> block(static_cast<long>(private_encoding.size()), 1);
    for (std::size_t k = 0; k < private_encoding.size(); ++k)
      block(static_cast<long>(k), 0) = private_encoding[k];
    const nn::Matrix<S> out = batch_logits(block);
    return std::vector<S>(out.data(), out.data() + out.size());
  }

  std::vector<double> probabilities(std::span<const S> private_encoding,
                                    std::span<const std::uint8_t> legal) const {
    const auto l = logits(private_encoding);
    return masked_softmax<S>(l, legal, inv_temp_);
  }

  // Action index chosen for the observation identified by `key`.
  int act(std::span<const S> private_encoding, std::span<const std::uint8_t> key,
          std::span<const std::uint8_t> legal) {
    std::string k(reinterpret_cast<const char*>(key.data()), key.size());
    if (auto it = cache_.find(k); it != cache_.end()) return it->second;
    check_legal(legal);
    const int a = draw(probabilities(private_encoding, legal), key);
    cache_.emplace(std::move(k), a);
    return a;
  }

  // Batched form of act(); `encodings` holds one private encoding per column.
  std::vector<int> act_batch(const nn::Matrix<S>& encodings,
                             const std::vector<std::vector<std::uint8_t>>& keys,
                             const std::vector<std::vector<std::uint8_t>>& legal) {
    const long n = encodings.cols();
    std::vector<int> out(static_cast<std::size_t>(n), -1);
    std::vector<long> todo;
    for (long j = 0; j < n; ++j) {
      const auto& key = keys[static_cast<std::size_t>(j)];
      auto it = cache_.find(std::string(reinterpret_cast<const char*>(key.data()), key.size()));
      if (it != cache_.end()) out[static_cast<std::size_t>(j)] = it->second;
      else todo.push_back(j);
    }
    if (todo.empty()) return out;
    nn::Matrix<S> block(encodings.rows(), static_cast<long>(todo.size()));
    for (std::size_t t = 0; t < todo.size(); ++t) block.col(static_cast<long>(t)) = encodings.col(todo[t]);
    const nn::Matrix<S> lg = batch_logits(block);
    for (std::size_t t = 0; t < todo.size(); ++t) {
      const auto j = static_cast<std::size_t>(todo[t]);
      check_legal(legal[j]);
      std::span<const S> col(lg.data() + static_cast<long>(t) * lg.rows(), static_cast<std::size_t>(lg.rows()));
      std::string k(reinterpret_cast<const char*>(keys[j].data()), keys[j].size());
      auto it = cache_.find(k);  // duplicates inside one batch
      if (it != cache_.end()) {
        out[j] = it->second;
        continue;
      }
      const int a = draw(masked_softmax<S>(col, legal[j], inv_temp_), keys[j]);
      cache_.emplace(std::move(k), a);
      out[j] = a;
    }
    return out;
  }

 private:
  static void check_legal(std::span<const std::uint8_t> legal) {
    for (auto b : legal)
      if (b) return;
    throw RuleViolation("partial policy evaluated with no legal action");
  }

  int draw(const std::vector<double>& probs, std::span<const std::uint8_t> key) const {
    const std::uint64_t h = hash_combine(seed_, fnv1a64(key));
    const double u = static_cast<double>(splitmix64(h) >> 11) * 0x1.0p-53;
    return inverse_cdf<double>(probs, u);
  }

  // Shares the public part of the first layer across observations.
  nn::Matrix<S> batch_logits(const nn::Matrix<S>& private_block) const {
    const auto& params = net_->params();
    const auto& w = params.tensors[0];
    const long pub = static_cast<long>(public_input_.size());
    nn::Matrix<S> z = w.middleCols(pub, private_block.rows()) * private_block;
    z.colwise() += first_public_;
    nn::Matrix<S> h = z.cwiseMax(S(0));
    const std::size_t layers = net_->shape().hidden.size();
    for (std::size_t k = 1; k < layers; ++k) {
      nn::Matrix<S> zk = params.tensors[2 * k] * h;
      zk.colwise() += params.tensors[2 * k + 1].col(0);
      h = zk.cwiseMax(S(0));
    }
    return net_->policy_logits(h);
  }

  const nn::Mlp<S>* net_;
  std::vector<S> public_input_;
  nn::Vector<S> first_public_;
  std::uint64_t seed_;
  double inv_temp_;
  std::unordered_map<std::string, int> cache_;
};

template <class S>
PartialPolicy<S> sample_partial_policy(const nn::Mlp<S>& net, std::vector<S> public_input,
                                       std::uint64_t seed, double inv_temp) {
  return PartialPolicy<S>(net, std::move(public_input), seed, inv_temp);
}

// ---------------------------------------------------------------------------
// Hanabi input encoding. See docs/input_layout.md for the full layout.

enum class BeliefVariant { kV0, kV1, kV2 };

inline std::string to_string(BeliefVariant v) {
  switch (v) {
    case BeliefVariant::kV0: return "v0";
    case BeliefVariant::kV1: return "v1";
    case BeliefVariant::kV2: return "v2";
  }
  return "?";
}

inline BeliefVariant parse_variant(const std::string& s) {
  if (s == "v0") return BeliefVariant::kV0;
  if (s == "v1") return BeliefVariant::kV1;
  if (s == "v2") return BeliefVariant::kV2;
  throw ConfigError("belief variant must be v0, v1 or v2 (got '" + s + "')");
}

class HanabiEncoder {
 public:
  HanabiEncoder() = default;
  HanabiEncoder(const hanabi::GameConfig& cfg, int horizon) : cfg_(cfg), horizon_(horizon) {
    const int cols = cfg.num_columns();
    const int slots = cfg.num_slots();
    int o = 0;
    fireworks_ = o; o += cfg.num_card_types();
    hints_ = o; o += cfg.max_hint_tokens;
    lives_ = o; o += cfg.max_life_tokens;
    deck_ = o; o += 1;
    turn_ = o; o += 1;
    discards_ = o; o += cfg.num_card_types();
    hint_mask_ = o; o += slots * cols;
    belief_ = o; o += slots * cols;
    last_actor_ = o; o += cfg.n_players;
    last_action_ = o; o += cfg.num_actions() + 1;
    last_hinted_ = o; o += cfg.hand();
    last_card_ = o; o += cols;
    last_success_ = o; o += 1;
    public_size_ = o;
    private_size_ = (cfg.n_players - 1) * cfg.hand() * cols;
    own_size_ = cfg.hand() * cols;
  }

  const hanabi::GameConfig& config() const { return cfg_; }
  int horizon() const { return horizon_; }
  int public_size() const { return public_size_; }
  int private_size() const { return private_size_; }
  int own_size() const { return own_size_; }
  int input_size() const { return public_size_ + private_size_ + own_size_; }
  int private_offset() const { return public_size_; }
  int own_offset() const { return public_size_ + private_size_; }
  int belief_offset() const { return belief_; }
  int hint_mask_offset() const { return hint_mask_; }

  // Public segment from `perspective`'s seat; slots are rotated so that the
  // perspective player's hand comes first.
  template <class S>
  void encode_public(const hanabi::PublicFeatures& pub, const belief::FactorisedBelief& b,
                     int perspective, S* out) const {
    std::fill(out, out + public_size_, S(0));
    const int cols = cfg_.num_columns();
    const int h = cfg_.hand();
    for (int c = 0; c < cfg_.n_color; ++c)
      for (int r = 0; r < pub.fireworks[static_cast<std::size_t>(c)]; ++r)
        out[fireworks_ + c * cfg_.n_rank + r] = S(1);
    for (int k = 0; k < pub.hint_tokens; ++k) out[hints_ + k] = S(1);
    for (int k = 0; k < pub.life_tokens; ++k) out[lives_ + k] = S(1);
    out[deck_] = static_cast<S>(static_cast<double>(pub.deck_remaining) / cfg_.deck_size());
    out[turn_] = static_cast<S>(static_cast<double>(pub.turn) / std::max(1, horizon_));
    for (int col = 0; col < cfg_.num_card_types(); ++col) {
      const auto card = hanabi::card_from_column(cfg_, col);
      out[discards_ + col] = static_cast<S>(static_cast<double>(pub.discards[col]) /
                                            hanabi::copies_of_rank(card.rank, cfg_.n_rank));
    }
    for (int rel = 0; rel < cfg_.n_players; ++rel) {
      const int player = (perspective + rel) % cfg_.n_players;
      for (int s = 0; s < h; ++s) {
        const int src = player * h + s;
        const int dst = (rel * h + s) * cols;
        for (int c = 0; c < cols; ++c) {
          out[hint_mask_ + dst + c] = static_cast<S>(pub.hint_mask.at(src, c));
          out[belief_ + dst + c] = static_cast<S>(b.probs(src, c));
        }
      }
    }
    if (pub.last_action) {
      const auto& la = *pub.last_action;
      out[last_actor_ + (la.actor - perspective + cfg_.n_players) % cfg_.n_players] = S(1);
      out[last_action_ + hanabi::action_index(cfg_, la.actor, la.action)] = S(1);
      for (int s = 0; s < h; ++s)
        if (la.hinted_slots & (1u << s)) out[last_hinted_ + s] = S(1);
      if (!la.revealed.is_null()) out[last_card_ + hanabi::card_column(cfg_, la.revealed)] = S(1);
      if (la.success) out[last_success_] = S(1);
    } else {
      out[last_action_ + cfg_.num_actions()] = S(1);
    }
  }

  // One-hot card columns, one block per slot.
  template <class S>
  void encode_cards(std::span<const std::uint8_t> columns, S* out) const {
    const int cols = cfg_.num_columns();
    std::fill(out, out + static_cast<long>(columns.size()) * cols, S(0));
    for (std::size_t s = 0; s < columns.size(); ++s)
      out[static_cast<long>(s) * cols + columns[s]] = S(1);
  }

  // Columns of the slots `agent` can see, nearest seat first, from a
  // player-major joint assignment.
  std::vector<std::uint8_t> visible_columns(std::span<const std::uint8_t> joint, int agent) const {
    const int h = cfg_.hand();
    std::vector<std::uint8_t> out;
    out.reserve(static_cast<std::size_t>((cfg_.n_players - 1) * h));
    for (int off = 1; off < cfg_.n_players; ++off) {
      const int p = (agent + off) % cfg_.n_players;
      for (int s = 0; s < h; ++s) out.push_back(joint[static_cast<std::size_t>(p * h + s)]);
    }
    return out;
  }

  std::vector<std::uint8_t> own_columns(std::span<const std::uint8_t> joint, int agent) const {
    const int h = cfg_.hand();
    return std::vector<std::uint8_t>(joint.begin() + agent * h, joint.begin() + (agent + 1) * h);
  }

 private:
  hanabi::GameConfig cfg_;
  int horizon_ = 65;
  int fireworks_ = 0, hints_ = 0, lives_ = 0, deck_ = 0, turn_ = 0, discards_ = 0;
  int hint_mask_ = 0, belief_ = 0, last_actor_ = 0, last_action_ = 0, last_hinted_ = 0;
  int last_card_ = 0, last_success_ = 0;
  int public_size_ = 0, private_size_ = 0, own_size_ = 0;
};

inline std::vector<std::uint8_t> joint_columns(const hanabi::GameState& s) {
  const auto cols = hanabi::true_columns(s);
  return std::vector<std::uint8_t>(cols.begin(), cols.end());
}

// Legal mask the actor would face if the joint hand were `joint`.
inline std::vector<std::uint8_t> legal_mask_for_joint(const hanabi::GameConfig& cfg,
                                                      const hanabi::PublicFeatures& pub, int actor,
                                                      std::span<const std::uint8_t> joint) {
  const int h = cfg.hand();
  std::vector<hanabi::Card> others;
  others.reserve(static_cast<std::size_t>((cfg.n_players - 1) * h));
  for (int off = 1; off < cfg.n_players; ++off) {
    const int p = (actor + off) % cfg.n_players;
    for (int s = 0; s < h; ++s)
      others.push_back(hanabi::card_from_column(cfg, joint[static_cast<std::size_t>(p * h + s)]));
  }
  std::span<const std::uint8_t> own(pub.occupied.data() + actor * h, static_cast<std::size_t>(h));
  return hanabi::legal_mask_from_view(cfg, pub.hint_tokens, own, others);
}

// Beliefs carried between public states.
struct BeliefSet {
  belief::LikelihoodTable likelihood;
  belief::FactorisedBelief v0, v1, bb, v2;

  const belief::FactorisedBelief& get(BeliefVariant v) const {
    switch (v) {
      case BeliefVariant::kV0: return v0;
      case BeliefVariant::kV1: return v1;
      case BeliefVariant::kV2: return v2;
    }
    return v2;
  }
};

// Recomputes the grounded and iterated beliefs from public features and L.
// With `with_bayes` false, BB and V2 are copies of V1; with `with_v1` false
// as well, every belief is a copy of V0.
inline BeliefSet refresh_beliefs(const hanabi::PublicFeatures& pub, belief::LikelihoodTable likelihood,
                                 const belief::BeliefConfig& cfg, bool with_bayes = true,
                                 bool with_v1 = true) {
  BeliefSet b;
  b.likelihood = std::move(likelihood);
  b.v0 = belief::v0_belief(pub.candidates, pub.hint_mask);
  if (!with_bayes && !with_v1) {
    b.v1 = b.bb = b.v2 = b.v0;
    return b;
  }
  b.v1 = belief::v1_iterate(b.v0, pub.candidates, pub.hint_mask, cfg.iterations, cfg.damping);
  if (with_bayes) {
    b.bb = belief::bb_belief(pub.candidates, pub.hint_mask, b.likelihood, cfg.iterations, cfg.damping);
    b.v2 = belief::v2_belief(b.bb, b.v1, cfg.v1_mixin);
  } else {
    b.bb = b.v1;
    b.v2 = b.v1;
  }
  return b;
}

inline BeliefSet initial_beliefs(const hanabi::PublicFeatures& pub, const belief::BeliefConfig& cfg,
                                 bool with_bayes = true, bool with_v1 = true) {
  return refresh_beliefs(
      pub, belief::LikelihoodTable::ones(pub.hint_mask.rows, pub.hint_mask.cols), cfg, with_bayes,
      with_v1);
}

struct TransitionReport {
  bool likelihood_applied = false;
  int samples_accepted = 0;
  int samples_attempted = 0;
};

// One public belief step: sample joint hands from the current V2, fold the
// observed action into L through the partial policy, reset L for the slot
// that was refilled, then recompute V0, V1, BB and V2 from the post-action
// public features. `policy(joint)` gives the action index the partial policy
// assigns to a joint hand; with empty samples the L update is skipped.
template <class Policy>
BeliefSet public_belief_transition(const BeliefSet& current, const hanabi::PublicFeatures& before,
                                   const hanabi::PublicFeatures& after,
                                   const hanabi::GameConfig& game, Policy&& policy, int observed,
                                   const hanabi::Action& action, int actor,
                                   const belief::BeliefConfig& cfg, int sample_count,
                                   std::uint64_t seed, TransitionReport* report = nullptr,
                                   const belief::HandSamples* given_samples = nullptr) {
  belief::LikelihoodTable l = current.likelihood;
  TransitionReport rep;
  if (observed != game.no_action_index()) {
    belief::HandSamples drawn;
    const belief::HandSamples* samples = given_samples;
    if (!samples) {
      drawn = belief::sample_hands(current.v2, before.candidates, sample_count,
                                   cfg.oversample_factor, seed);
      samples = &drawn;
    }
    rep.samples_accepted = samples->accepted;
    rep.samples_attempted = samples->attempted;
    if (!samples->empty()) {
      l = belief::likelihood_update(l, *samples, policy, observed, actor, game.hand(),
                                    cfg.likelihood_floor);
      rep.likelihood_applied = true;
    }
  }
  if (action.kind == hanabi::ActionKind::kPlay || action.kind == hanabi::ActionKind::kDiscard)
    l = belief::reset_slot(std::move(l), actor * game.hand() + action.slot);
  if (report) *report = rep;
  return refresh_beliefs(after, std::move(l), cfg);
}

// ---------------------------------------------------------------------------
// Matrix game: exact marginalised reward of a pair of partial policies.

inline double bad_reward(const matrix::ExactBelief& card1, const matrix::ExactBelief& card2,
                         const std::array<int, matrix::kCards>& pi1,
                         const std::array<std::array<int, matrix::kActions>, matrix::kCards>& pi2,
                         const matrix::PayoffTensor& payoff) {
  double r = 0.0;
  for (int c1 = 0; c1 < matrix::kCards; ++c1)
    for (int c2 = 0; c2 < matrix::kCards; ++c2) {
      const int u1 = pi1[static_cast<std::size_t>(c1)];
      const int u2 = pi2[static_cast<std::size_t>(c2)][static_cast<std::size_t>(u1)];
      r += card1[c1] * card2[c2] * payoff(c1, c2, u1, u2);
    }
  return r;
}

}  // namespace bad::pubmdp
