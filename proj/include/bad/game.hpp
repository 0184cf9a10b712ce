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

// Configurable Hanabi engine. States are plain values: copy them to branch,
// compare them with state_hash(). Slot positions are stable: a played or
// discarded card is replaced in place by the next deck card.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bad/error.hpp"
#include "bad/rng.hpp"

namespace bad::hanabi {

struct GameConfig {
  int n_color = 5;
  int n_rank = 5;
  int n_players = 2;
  // Unset selects 5 cards for 2-3 players and 4 cards for 4-5 players.
  std::optional<int> hand_size;
  int max_hint_tokens = 8;
  int max_life_tokens = 3;
  bool allow_discard_at_max_hints = true;
  bool strict_scoring = false;

  int hand() const { return hand_size.value_or(n_players <= 3 ? 5 : 4); }
  int num_card_types() const { return n_color * n_rank; }
  // Card types plus the trailing "no card" column.
  int num_columns() const { return num_card_types() + 1; }
  int null_column() const { return num_card_types(); }
  int num_slots() const { return n_players * hand(); }
  int deck_size() const { return 2 * n_color * n_rank; }
  int max_score() const { return n_color * n_rank; }
  int hints_per_target() const { return n_color + n_rank; }
  // Play and discard per slot, colour and rank hints per teammate, no-action.
  int num_actions() const {
    return 2 * hand() + (n_players - 1) * hints_per_target() + 1;
  }
  int no_action_index() const { return num_actions() - 1; }

  void validate() const {
    if (n_color < 1) throw ConfigError("n_color must be >= 1");
    if (n_rank < 2) throw ConfigError("n_rank must be >= 2");
    if (n_players < 2 || n_players > 5)
      throw ConfigError("n_players must be in [2, 5]");
    if (hand() < 1) throw ConfigError("hand_size must be >= 1");
    if (hand() > 30) throw ConfigError("hand_size must be <= 30");
    if (n_color > 25 || n_rank > 25)
      throw ConfigError("n_color and n_rank must be <= 25");
    if (deck_size() < num_slots())
      throw ConfigError("deck too small to deal every hand");
    if (max_hint_tokens < 1) throw ConfigError("max_hint_tokens must be >= 1");
    if (max_life_tokens < 1) throw ConfigError("max_life_tokens must be >= 1");
  }

  bool operator==(const GameConfig&) const = default;
};

// Copies of a card in a fresh deck: three of rank 1, one of the top rank,
// two of everything in between.
constexpr int copies_of_rank(int rank, int n_rank) {
  if (rank == 1) return 3;
  if (rank == n_rank) return 1;
  return 2;
}

struct Card {
  std::int8_t color = -1;
  std::int8_t rank = 0;  // 1-based

  static constexpr Card null() { return Card{}; }
  static constexpr Card of(int color, int rank) {
    return Card{static_cast<std::int8_t>(color), static_cast<std::int8_t>(rank)};
  }
  constexpr bool is_null() const { return color < 0; }
  bool operator==(const Card&) const = default;
};

inline int card_column(const GameConfig& cfg, Card card) {
  if (card.is_null()) return cfg.null_column();
  return card.color * cfg.n_rank + (card.rank - 1);
}

inline Card card_from_column(const GameConfig& cfg, int column) {
  if (column >= cfg.num_card_types() || column < 0) return Card::null();
  return Card::of(column / cfg.n_rank, column % cfg.n_rank + 1);
}

inline std::string to_string(const GameConfig& cfg, Card card) {
  if (card.is_null()) return "--";
  static constexpr const char* kColors = "RYGWBOPCMTabcdefghijklmnop";
  std::string s;
  s += kColors[card.color % 26];
  s += std::to_string(card.rank);
  (void)cfg;
  return s;
}

// Per card type counts.
struct CardMultiset {
  std::vector<int> counts;

  int& operator[](int column) { return counts[static_cast<std::size_t>(column)]; }
  int operator[](int column) const {
    return counts[static_cast<std::size_t>(column)];
  }
  int total() const { return std::accumulate(counts.begin(), counts.end(), 0); }
  bool operator==(const CardMultiset&) const = default;

  static CardMultiset empty(const GameConfig& cfg) {
    return CardMultiset{std::vector<int>(static_cast<std::size_t>(cfg.num_card_types()), 0)};
  }
  static CardMultiset fresh_deck(const GameConfig& cfg) {
    CardMultiset m = empty(cfg);
    for (int c = 0; c < cfg.n_color; ++c)
      for (int r = 1; r <= cfg.n_rank; ++r)
        m[card_column(cfg, Card::of(c, r))] = copies_of_rank(r, cfg.n_rank);
    return m;
  }
};

// Row per slot (player-major), column per card type plus the null column.
struct HintMask {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> bits;

  HintMask() = default;
  HintMask(int r, int c) : rows(r), cols(c), bits(static_cast<std::size_t>(r * c), 0) {}

  std::uint8_t at(int r, int c) const { return bits[static_cast<std::size_t>(r * cols + c)]; }
  std::uint8_t& at(int r, int c) { return bits[static_cast<std::size_t>(r * cols + c)]; }
  std::span<const std::uint8_t> row(int r) const {
    return {bits.data() + static_cast<std::size_t>(r * cols), static_cast<std::size_t>(cols)};
  }
  bool operator==(const HintMask&) const = default;
};

enum class ActionKind : std::uint8_t { kPlay, kDiscard, kHintColor, kHintRank, kNoAction };

struct Action {
  ActionKind kind = ActionKind::kNoAction;
  int slot = -1;
  int target = -1;  // absolute player index
  int color = -1;
  int rank = -1;

  static Action play(int slot) { return {ActionKind::kPlay, slot, -1, -1, -1}; }
  static Action discard(int slot) { return {ActionKind::kDiscard, slot, -1, -1, -1}; }
  static Action hint_color(int target, int color) {
    return {ActionKind::kHintColor, -1, target, color, -1};
  }
  static Action hint_rank(int target, int rank) {
    return {ActionKind::kHintRank, -1, target, -1, rank};
  }
  static Action none() { return {}; }

  bool is_hint() const {
    return kind == ActionKind::kHintColor || kind == ActionKind::kHintRank;
  }
  bool operator==(const Action&) const = default;
};

inline std::string to_string(const Action& a) {
  switch (a.kind) {
    case ActionKind::kPlay: return "play(" + std::to_string(a.slot) + ")";
    case ActionKind::kDiscard: return "discard(" + std::to_string(a.slot) + ")";
    case ActionKind::kHintColor:
      return "hint_color(p" + std::to_string(a.target) + "," + std::to_string(a.color) + ")";
    case ActionKind::kHintRank:
      return "hint_rank(p" + std::to_string(a.target) + "," + std::to_string(a.rank) + ")";
    case ActionKind::kNoAction: return "no_action";
  }
  return "?";
}

// Dense action ids are relative to the actor so one network serves every seat:
// [play 0..h) [discard 0..h) [per teammate offset: colours, ranks] [no-action].
inline int action_index(const GameConfig& cfg, int actor, const Action& a) {
  const int h = cfg.hand();
  switch (a.kind) {
    case ActionKind::kPlay: return a.slot;
    case ActionKind::kDiscard: return h + a.slot;
    case ActionKind::kHintColor:
    case ActionKind::kHintRank: {
      const int offset = (a.target - actor + cfg.n_players) % cfg.n_players;
      const int base = 2 * h + (offset - 1) * cfg.hints_per_target();
      return a.kind == ActionKind::kHintColor ? base + a.color
                                              : base + cfg.n_color + a.rank - 1;
    }
    case ActionKind::kNoAction: return cfg.no_action_index();
  }
  return -1;
}

inline Action action_from_index(const GameConfig& cfg, int actor, int index) {
  const int h = cfg.hand();
  if (index < 0 || index >= cfg.num_actions())
    throw RuleViolation("action index out of range: " + std::to_string(index));
  if (index == cfg.no_action_index()) return Action::none();
  if (index < h) return Action::play(index);
  if (index < 2 * h) return Action::discard(index - h);
  const int rel = index - 2 * h;
  const int offset = rel / cfg.hints_per_target() + 1;
  const int within = rel % cfg.hints_per_target();
  const int target = (actor + offset) % cfg.n_players;
  if (within < cfg.n_color) return Action::hint_color(target, within);
  return Action::hint_rank(target, within - cfg.n_color + 1);
}

// Public record of the most recent acting-player move.
struct ActionRecord {
  int actor = -1;
  Action action;
  std::uint32_t hinted_slots = 0;  // bit s set when slot s matched a hint
  Card revealed;                   // played or discarded card
  bool success = false;            // play landed on a firework
  bool operator==(const ActionRecord&) const = default;
};

// Acting-player legality from what the actor can see: its own slot occupancy
// (public) and the other hands in relative seat order.
inline std::vector<std::uint8_t> legal_mask_from_view(
    const GameConfig& cfg, int hint_tokens, std::span<const std::uint8_t> own_occupied,
    std::span<const Card> others) {
  const int h = cfg.hand();
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(cfg.num_actions()), 0);
  const bool discard_ok = cfg.allow_discard_at_max_hints || hint_tokens < cfg.max_hint_tokens;
  for (int s = 0; s < h; ++s) {
    if (!own_occupied[static_cast<std::size_t>(s)]) continue;
    mask[static_cast<std::size_t>(s)] = 1;
    if (discard_ok) mask[static_cast<std::size_t>(h + s)] = 1;
  }
  if (hint_tokens > 0) {
    for (int off = 1; off < cfg.n_players; ++off) {
      const int base = 2 * h + (off - 1) * cfg.hints_per_target();
      for (int s = 0; s < h; ++s) {
        const Card c = others[static_cast<std::size_t>((off - 1) * h + s)];
        if (c.is_null()) continue;
        mask[static_cast<std::size_t>(base + c.color)] = 1;
        mask[static_cast<std::size_t>(base + cfg.n_color + c.rank - 1)] = 1;
      }
    }
  }
  return mask;
}

struct PublicFeatures {
  CardMultiset candidates;  // fresh deck minus fireworks and discards
  HintMask hint_mask;
  int hint_tokens = 0;
  int life_tokens = 0;
  std::vector<int> fireworks;
  CardMultiset discards;
  std::optional<ActionRecord> last_action;
  int deck_remaining = 0;
  int current_player = 0;
  int turn = 0;
  std::vector<std::uint8_t> occupied;  // per slot, player-major
};

// Everything agent `agent` sees: the other hands, nearest seat first.
struct PrivateObservation {
  int agent = 0;
  std::vector<int> players;
  std::vector<Card> cards;  // players.size() * hand_size, slot order
};

struct StepOutcome {
  int reward = 0;
  bool terminal = false;
};

class GameState {
 public:
  const GameConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<Card>& deck_order() const { return deck_; }
  int deck_position() const { return deck_pos_; }
  int deck_remaining() const { return static_cast<int>(deck_.size()) - deck_pos_; }
  const std::vector<std::vector<Card>>& hands() const { return hands_; }
  Card card(int player, int slot) const {
    return hands_[static_cast<std::size_t>(player)][static_cast<std::size_t>(slot)];
  }
  const std::vector<int>& fireworks() const { return fireworks_; }
  int hint_tokens() const { return hint_tokens_; }
  int life_tokens() const { return life_tokens_; }
  const CardMultiset& discards() const { return discards_; }
  const HintMask& hint_mask() const { return hint_mask_; }
  int current_player() const { return current_player_; }
  const std::optional<ActionRecord>& last_action() const { return last_action_; }
  // -1 while the deck still has cards, then the number of turns left.
  int final_turns_remaining() const { return final_turns_; }
  int turn() const { return turn_; }
  bool is_terminal() const { return terminal_; }
  // Turn at which each slot (player-major) received its current card.
  const std::vector<int>& slot_fill_turn() const { return fill_turn_; }

  int raw_score() const { return std::accumulate(fireworks_.begin(), fireworks_.end(), 0); }
  int score() const {
    if (config_.strict_scoring && life_tokens_ == 0) return 0;
    return raw_score();
  }

  std::vector<std::uint8_t> occupied(int player) const {
    std::vector<std::uint8_t> occ(static_cast<std::size_t>(config_.hand()));
    for (int s = 0; s < config_.hand(); ++s)
      occ[static_cast<std::size_t>(s)] = card(player, s).is_null() ? 0 : 1;
    return occ;
  }

  // Other hands as seen by `agent`, nearest seat first.
  std::vector<Card> visible_cards(int agent) const {
    std::vector<Card> out;
    out.reserve(static_cast<std::size_t>((config_.n_players - 1) * config_.hand()));
    for (int off = 1; off < config_.n_players; ++off) {
      const auto& hand = hands_[static_cast<std::size_t>((agent + off) % config_.n_players)];
      out.insert(out.end(), hand.begin(), hand.end());
    }
    return out;
  }

  std::vector<std::uint8_t> legal_mask(int agent) const {
    if (terminal_) throw TerminalStateError("no legal actions in a finished game");
    if (agent != current_player_) {
      std::vector<std::uint8_t> mask(static_cast<std::size_t>(config_.num_actions()), 0);
      mask.back() = 1;
      return mask;
    }
    const auto occ = occupied(agent);
    const auto others = visible_cards(agent);
    return legal_mask_from_view(config_, hint_tokens_, occ, others);
  }

  std::vector<Action> legal_actions(int agent) const {
    const auto mask = legal_mask(agent);
    std::vector<Action> out;
    for (int i = 0; i < static_cast<int>(mask.size()); ++i)
      if (mask[static_cast<std::size_t>(i)]) out.push_back(action_from_index(config_, agent, i));
    return out;
  }

  bool is_legal(const Action& a) const {
    if (terminal_ || a.kind == ActionKind::kNoAction) return false;
    if (a.kind == ActionKind::kPlay || a.kind == ActionKind::kDiscard) {
      if (a.slot < 0 || a.slot >= config_.hand()) return false;
    } else {
      if (a.target < 0 || a.target >= config_.n_players || a.target == current_player_) return false;
      if (a.kind == ActionKind::kHintColor && (a.color < 0 || a.color >= config_.n_color)) return false;
      if (a.kind == ActionKind::kHintRank && (a.rank < 1 || a.rank > config_.n_rank)) return false;
    }
    const auto mask = legal_mask(current_player_);
    return mask[static_cast<std::size_t>(action_index(config_, current_player_, a))] != 0;
  }

  // Applies the acting player's move in place.
  StepOutcome apply(const Action& a) {
    if (terminal_) throw TerminalStateError("apply on a finished game");
    if (!is_legal(a))
      throw RuleViolation("player " + std::to_string(current_player_) + " cannot " + to_string(a));
    const int p = current_player_;
    const int h = config_.hand();
    StepOutcome out;
    ActionRecord rec;
    rec.actor = p;
    rec.action = a;
    bool drew_last = false;

    switch (a.kind) {
      case ActionKind::kPlay: {
        const Card c = card(p, a.slot);
        rec.revealed = c;
        auto& height = fireworks_[static_cast<std::size_t>(c.color)];
        if (height + 1 == c.rank) {
          ++height;
          out.reward = 1;
          rec.success = true;
          if (c.rank == config_.n_rank && hint_tokens_ < config_.max_hint_tokens) ++hint_tokens_;
        } else {
          --life_tokens_;
          ++discards_[card_column(config_, c)];
        }
        drew_last = draw_into(p, a.slot);
        break;
      }
      case ActionKind::kDiscard: {
        const Card c = card(p, a.slot);
        rec.revealed = c;
        ++discards_[card_column(config_, c)];
        hint_tokens_ = std::min(hint_tokens_ + 1, config_.max_hint_tokens);
        drew_last = draw_into(p, a.slot);
        break;
      }
      case ActionKind::kHintColor:
      case ActionKind::kHintRank: {
        --hint_tokens_;
        const bool by_color = a.kind == ActionKind::kHintColor;
        for (int s = 0; s < h; ++s) {
          const Card c = card(a.target, s);
          if (c.is_null()) continue;
          const bool match = by_color ? c.color == a.color : c.rank == a.rank;
          if (match) rec.hinted_slots |= (1u << s);
          const int row = a.target * h + s;
          for (int col = 0; col < config_.num_card_types(); ++col) {
            const Card k = card_from_column(config_, col);
            const bool k_match = by_color ? k.color == a.color : k.rank == a.rank;
            if (k_match != match) hint_mask_.at(row, col) = 0;
          }
        }
        break;
      }
      case ActionKind::kNoAction: break;
    }

    last_action_ = rec;
    ++turn_;
    if (life_tokens_ == 0 || raw_score() == config_.max_score()) {
      terminal_ = true;
    } else if (drew_last) {
      final_turns_ = config_.n_players;
    } else if (final_turns_ > 0) {
      if (--final_turns_ == 0) terminal_ = true;
    }
    current_player_ = (current_player_ + 1) % config_.n_players;
    out.terminal = terminal_;
    return out;
  }

 private:
  friend GameState new_game_from_deck(const GameConfig& cfg, std::vector<Card> deck,
                                      std::uint64_t seed);

  // Returns true when this draw took the final deck card.
  bool draw_into(int player, int slot) {
    const int row = player * config_.hand() + slot;
    auto& dst = hands_[static_cast<std::size_t>(player)][static_cast<std::size_t>(slot)];
    if (deck_pos_ < static_cast<int>(deck_.size())) {
      dst = deck_[static_cast<std::size_t>(deck_pos_++)];
      for (int col = 0; col < config_.num_card_types(); ++col) hint_mask_.at(row, col) = 1;
      hint_mask_.at(row, config_.null_column()) = 0;
      fill_turn_[static_cast<std::size_t>(row)] = turn_;
      return deck_pos_ == static_cast<int>(deck_.size());
    }
    dst = Card::null();
    for (int col = 0; col < config_.num_card_types(); ++col) hint_mask_.at(row, col) = 0;
    hint_mask_.at(row, config_.null_column()) = 1;
    fill_turn_[static_cast<std::size_t>(row)] = turn_;
    return false;
  }

  GameConfig config_;
  std::uint64_t seed_ = 0;
  std::vector<Card> deck_;
  int deck_pos_ = 0;
  std::vector<std::vector<Card>> hands_;
  std::vector<int> fireworks_;
  int hint_tokens_ = 0;
  int life_tokens_ = 0;
  CardMultiset discards_;
  HintMask hint_mask_;
  int current_player_ = 0;
  std::optional<ActionRecord> last_action_;
  int final_turns_ = -1;
  int turn_ = 0;
  bool terminal_ = false;
  std::vector<int> fill_turn_;
};

// Deals from `deck` front to back, round-robin by slot.
inline GameState new_game_from_deck(const GameConfig& cfg, std::vector<Card> deck,
                                    std::uint64_t seed = 0) {
  cfg.validate();
  {
    CardMultiset have = CardMultiset::empty(cfg);
    for (Card c : deck) {
      if (c.is_null() || c.color >= cfg.n_color || c.rank < 1 || c.rank > cfg.n_rank)
        throw ConfigError("deck contains an invalid card");
      ++have[card_column(cfg, c)];
    }
    if (have != CardMultiset::fresh_deck(cfg))
      throw ConfigError("deck does not match the fresh composition");
  }
  GameState s;
  s.config_ = cfg;
  s.seed_ = seed;
  s.deck_ = std::move(deck);
  const int h = cfg.hand();
  s.hands_.assign(static_cast<std::size_t>(cfg.n_players), std::vector<Card>(static_cast<std::size_t>(h)));
  s.fireworks_.assign(static_cast<std::size_t>(cfg.n_color), 0);
  s.hint_tokens_ = cfg.max_hint_tokens;
  s.life_tokens_ = cfg.max_life_tokens;
  s.discards_ = CardMultiset::empty(cfg);
  s.hint_mask_ = HintMask(cfg.num_slots(), cfg.num_columns());
  s.fill_turn_.assign(static_cast<std::size_t>(cfg.num_slots()), 0);
  for (int slot = 0; slot < h; ++slot)
    for (int p = 0; p < cfg.n_players; ++p) s.draw_into(p, slot);
  if (s.deck_remaining() == 0) s.final_turns_ = cfg.n_players;
  return s;
}

inline GameState new_game(const GameConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::vector<Card> deck;
  deck.reserve(static_cast<std::size_t>(cfg.deck_size()));
  for (int c = 0; c < cfg.n_color; ++c)
    for (int r = 1; r <= cfg.n_rank; ++r)
      for (int k = 0; k < copies_of_rank(r, cfg.n_rank); ++k) deck.push_back(Card::of(c, r));
  Rng rng(seed);
  rng.shuffle(deck);
  return new_game_from_deck(cfg, std::move(deck), seed);
}

inline std::vector<Action> legal_actions(const GameState& s, int agent) {
  return s.legal_actions(agent);
}

struct Transition {
  GameState state;
  int reward = 0;
  bool terminal = false;
};

inline Transition apply_action(const GameState& s, const Action& a) {
  Transition t{s, 0, false};
  const auto out = t.state.apply(a);
  t.reward = out.reward;
  t.terminal = out.terminal;
  return t;
}

inline int score(const GameState& s) { return s.score(); }

inline PublicFeatures public_features(const GameState& s) {
  const auto& cfg = s.config();
  PublicFeatures f;
  f.candidates = CardMultiset::fresh_deck(cfg);
  for (int c = 0; c < cfg.n_color; ++c)
    for (int r = 1; r <= s.fireworks()[static_cast<std::size_t>(c)]; ++r)
      --f.candidates[card_column(cfg, Card::of(c, r))];
  for (int col = 0; col < cfg.num_card_types(); ++col) f.candidates[col] -= s.discards()[col];
  f.hint_mask = s.hint_mask();
  f.hint_tokens = s.hint_tokens();
  f.life_tokens = s.life_tokens();
  f.fireworks = s.fireworks();
  f.discards = s.discards();
  f.last_action = s.last_action();
  f.deck_remaining = s.deck_remaining();
  f.current_player = s.current_player();
  f.turn = s.turn();
  f.occupied.reserve(static_cast<std::size_t>(cfg.num_slots()));
  for (int p = 0; p < cfg.n_players; ++p)
    for (int slot = 0; slot < cfg.hand(); ++slot)
      f.occupied.push_back(s.card(p, slot).is_null() ? 0 : 1);
  return f;
}

inline PrivateObservation private_observation(const GameState& s, int agent) {
  const auto& cfg = s.config();
  if (agent < 0 || agent >= cfg.n_players) throw ConfigError("agent index out of range");
  PrivateObservation o;
  o.agent = agent;
  for (int off = 1; off < cfg.n_players; ++off) o.players.push_back((agent + off) % cfg.n_players);
  o.cards = s.visible_cards(agent);
  return o;
}

// Card columns of every slot, player-major; the null column marks empty slots.
inline std::vector<int> true_columns(const GameState& s) {
  std::vector<int> cols;
  cols.reserve(static_cast<std::size_t>(s.config().num_slots()));
  for (const auto& hand : s.hands())
    for (Card c : hand) cols.push_back(card_column(s.config(), c));
  return cols;
}

inline std::uint64_t state_hash(const GameState& s) {
  std::vector<std::uint8_t> b;
  auto put = [&b](int v) {
    for (int k = 0; k < 4; ++k) b.push_back(static_cast<std::uint8_t>((static_cast<std::uint32_t>(v) >> (8 * k)) & 0xff));
  };
  for (Card c : s.deck_order()) { put(c.color); put(c.rank); }
  put(s.deck_position());
  for (const auto& hand : s.hands())
    for (Card c : hand) { put(c.color); put(c.rank); }
  for (int f : s.fireworks()) put(f);
  put(s.hint_tokens());
  put(s.life_tokens());
  for (int d : s.discards().counts) put(d);
  b.insert(b.end(), s.hint_mask().bits.begin(), s.hint_mask().bits.end());
  put(s.current_player());
  put(s.final_turns_remaining());
  put(s.turn());
  put(s.is_terminal() ? 1 : 0);
  if (const auto& la = s.last_action()) {
    put(la->actor);
    put(static_cast<int>(la->action.kind));
    put(la->action.slot); put(la->action.target); put(la->action.color); put(la->action.rank);
    put(static_cast<int>(la->hinted_slots));
    put(la->revealed.color); put(la->revealed.rank);
    put(la->success ? 1 : 0);
  }
  return fnv1a64(b);
}

// Conservation, token bounds and hint-mask truth; empty means no violation.
inline std::vector<std::string> check_invariants(const GameState& s) {
  std::vector<std::string> bad;
  const auto& cfg = s.config();
  CardMultiset seen = CardMultiset::empty(cfg);
  for (int i = s.deck_position(); i < static_cast<int>(s.deck_order().size()); ++i)
    ++seen[card_column(cfg, s.deck_order()[static_cast<std::size_t>(i)])];
  for (const auto& hand : s.hands())
    for (Card c : hand)
      if (!c.is_null()) ++seen[card_column(cfg, c)];
  for (int col = 0; col < cfg.num_card_types(); ++col) seen[col] += s.discards()[col];
  for (int c = 0; c < cfg.n_color; ++c) {
    const int height = s.fireworks()[static_cast<std::size_t>(c)];
    if (height < 0 || height > cfg.n_rank) bad.push_back("firework height out of range");
    for (int r = 1; r <= height; ++r) ++seen[card_column(cfg, Card::of(c, r))];
  }
  if (seen != CardMultiset::fresh_deck(cfg)) bad.push_back("card conservation broken");
  if (s.hint_tokens() < 0 || s.hint_tokens() > cfg.max_hint_tokens)
    bad.push_back("hint tokens out of range");
  if (s.life_tokens() < 0 || s.life_tokens() > cfg.max_life_tokens)
    bad.push_back("life tokens out of range");
  for (int p = 0; p < cfg.n_players; ++p)
    for (int slot = 0; slot < cfg.hand(); ++slot) {
      const int col = card_column(cfg, s.card(p, slot));
      if (!s.hint_mask().at(p * cfg.hand() + slot, col))
        bad.push_back("hint mask excludes the true card");
    }
  return bad;
}

// Joint two-player deal counts under three readings of "joint hand".
struct JointHandCounts {
  unsigned __int128 ordered_by_type = 0;   // slot-ordered card-type sequences
  unsigned __int128 ordered_physical = 0;  // slot-ordered, copies distinguishable
  unsigned __int128 unordered = 0;         // pair of per-player type multisets
};

inline std::string u128_to_string(unsigned __int128 v) {
  if (v == 0) return "0";
  std::string s;
  while (v > 0) {
    s.insert(s.begin(), static_cast<char>('0' + static_cast<int>(v % 10)));
    v /= 10;
  }
  return s;
}

inline JointHandCounts count_joint_hands(const CardMultiset& composition, int n_players,
                                         int hand_size) {
  using u128 = unsigned __int128;
  if (n_players != 2) throw ConfigError("count_joint_hands supports two players");
  if (hand_size < 0) throw ConfigError("hand_size must be >= 0");
  const int n = n_players * hand_size;
  const int total = composition.total();
  JointHandCounts out;
  if (n > total) return out;

  std::vector<std::vector<u128>> binom(static_cast<std::size_t>(n + 1));
  for (int i = 0; i <= n; ++i) {
    binom[static_cast<std::size_t>(i)].assign(static_cast<std::size_t>(i + 1), 1);
    for (int k = 1; k < i; ++k)
      binom[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] =
          binom[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(k - 1)] +
          binom[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(k)];
  }

  // ways[m]: words over the types seen so far filling m of the n positions.
  std::vector<u128> ways(static_cast<std::size_t>(n + 1), 0);
  ways[0] = 1;
  for (int count : composition.counts) {
    std::vector<u128> next(ways.size(), 0);
    for (int m = 0; m <= n; ++m) {
      if (ways[static_cast<std::size_t>(m)] == 0) continue;
      for (int k = 0; k <= std::min(count, n - m); ++k)
        next[static_cast<std::size_t>(m + k)] +=
            ways[static_cast<std::size_t>(m)] * binom[static_cast<std::size_t>(n - m)][static_cast<std::size_t>(k)];
    }
    ways = std::move(next);
  }
  out.ordered_by_type = ways[static_cast<std::size_t>(n)];

  out.ordered_physical = 1;
  for (int i = 0; i < n; ++i) out.ordered_physical *= static_cast<u128>(total - i);

  // pairs[a][b]: first hand has a cards, second has b.
  const auto hs = static_cast<std::size_t>(hand_size + 1);
  std::vector<u128> pairs(hs * hs, 0);
  pairs[0] = 1;
  for (int count : composition.counts) {
    std::vector<u128> next(pairs.size(), 0);
    for (int a = 0; a <= hand_size; ++a)
      for (int b = 0; b <= hand_size; ++b) {
        const u128 w = pairs[static_cast<std::size_t>(a) * hs + static_cast<std::size_t>(b)];
        if (w == 0) continue;
        for (int i = 0; i <= count && a + i <= hand_size; ++i)
          for (int j = 0; i + j <= count && b + j <= hand_size; ++j)
            next[static_cast<std::size_t>(a + i) * hs + static_cast<std::size_t>(b + j)] += w;
      }
    pairs = std::move(next);
  }
  out.unordered = pairs.back();
  return out;
}

inline JointHandCounts count_joint_hands(const GameConfig& cfg) {
  cfg.validate();
  return count_joint_hands(CardMultiset::fresh_deck(cfg), cfg.n_players, cfg.hand());
}

}  // namespace bad::hanabi
