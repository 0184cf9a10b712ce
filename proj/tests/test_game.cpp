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

#include <algorithm>
#include <set>

#include "bad/game.hpp"
#include "bad/rng.hpp"

namespace bad::hanabi {
namespace {

GameConfig standard() { return GameConfig{}; }

GameConfig mini() {
  GameConfig c;
  c.n_color = 2;
  c.n_rank = 3;
  c.hand_size = 2;
  return c;
}

Card column_card(const GameConfig& cfg, int col) { return card_from_column(cfg, col); }

TEST(Config, DerivedSizes) {
  const auto cfg = standard();
  EXPECT_EQ(cfg.hand(), 5);
  EXPECT_EQ(cfg.deck_size(), 50);
  EXPECT_EQ(cfg.num_columns(), 26);
  EXPECT_EQ(cfg.num_slots(), 10);
  EXPECT_EQ(cfg.num_actions(), 2 * 5 + 10 + 1);
  GameConfig four;
  four.n_players = 4;
  EXPECT_EQ(four.hand(), 4);
  GameConfig broken;
  broken.n_players = 6;
  EXPECT_THROW(broken.validate(), ConfigError);
}

TEST(Deck, FreshComposition) {
  const auto deck = CardMultiset::fresh_deck(standard());
  EXPECT_EQ(deck.total(), 50);
  EXPECT_EQ(deck[card_column(standard(), Card::of(0, 1))], 3);
  EXPECT_EQ(deck[card_column(standard(), Card::of(0, 3))], 2);
  EXPECT_EQ(deck[card_column(standard(), Card::of(4, 5))], 1);
}

TEST(NewGame, DealsHandsAndTokens) {
  const auto s = new_game(standard(), 7);
  EXPECT_EQ(s.deck_remaining(), 40);
  EXPECT_EQ(s.hint_tokens(), 8);
  EXPECT_EQ(s.life_tokens(), 3);
  EXPECT_EQ(s.current_player(), 0);
  for (const auto& hand : s.hands()) {
    ASSERT_EQ(hand.size(), 5u);
    for (Card c : hand) EXPECT_FALSE(c.is_null());
  }
  EXPECT_TRUE(check_invariants(s).empty());
}

TEST(NewGame, SameSeedSameDeal) {
  EXPECT_EQ(state_hash(new_game(standard(), 11)), state_hash(new_game(standard(), 11)));
  EXPECT_NE(state_hash(new_game(standard(), 11)), state_hash(new_game(standard(), 12)));
}

TEST(Actions, IndexRoundTrip) {
  for (const auto& cfg : {standard(), mini()}) {
    GameConfig three = cfg;
    three.n_players = 3;
    for (const auto& c : {cfg, three})
      for (int actor = 0; actor < c.n_players; ++actor)
        for (int i = 0; i < c.num_actions(); ++i)
          EXPECT_EQ(action_index(c, actor, action_from_index(c, actor, i)), i);
  }
  EXPECT_THROW(action_from_index(standard(), 0, standard().num_actions()), RuleViolation);
}

TEST(Actions, ActingPlayerOnly) {
  auto s = new_game(standard(), 3);
  const auto mask = s.legal_mask(1);
  for (int i = 0; i < standard().no_action_index(); ++i) EXPECT_EQ(mask[static_cast<std::size_t>(i)], 0);
  EXPECT_EQ(mask.back(), 1);
  EXPECT_THROW(s.apply(Action::none()), RuleViolation);
}

TEST(Actions, HintNeedsTokenAndMatchingCard) {
  auto s = new_game(standard(), 5);
  std::set<int> colours;
  for (Card c : s.hands()[1]) colours.insert(c.color);
  for (int col = 0; col < 5; ++col)
    EXPECT_EQ(s.is_legal(Action::hint_color(1, col)), colours.count(col) == 1);
  EXPECT_FALSE(s.is_legal(Action::hint_color(0, s.card(0, 0).color)));
  for (int k = 0; k < 8; ++k) {
    const int other = 1 - s.current_player();
    s.apply(Action::hint_color(other, s.card(other, 0).color));
  }
  EXPECT_EQ(s.hint_tokens(), 0);
  const int other = 1 - s.current_player();
  EXPECT_FALSE(s.is_legal(Action::hint_color(other, s.card(other, 0).color)));
  EXPECT_THROW(s.apply(Action::hint_rank(other, s.card(other, 0).rank)), RuleViolation);
}

TEST(Actions, DiscardAtMaxHintsConfigurable) {
  auto cfg = standard();
  EXPECT_TRUE(new_game(cfg, 1).is_legal(Action::discard(0)));
  cfg.allow_discard_at_max_hints = false;
  EXPECT_FALSE(new_game(cfg, 1).is_legal(Action::discard(0)));
}

TEST(Apply, PlayAndDiscardEffects) {
  // Stacked deck: player 0 holds a rank-1 card in slot 0 and a rank-5 in slot 1.
  const auto cfg = standard();
  std::vector<Card> deck;
  for (int c = 0; c < 5; ++c)
    for (int r = 1; r <= 5; ++r)
      for (int k = 0; k < copies_of_rank(r, 5); ++k) deck.push_back(Card::of(c, r));
  auto move_front = [&](Card want, std::size_t pos) {
    auto it = std::find(deck.begin() + static_cast<long>(pos), deck.end(), want);
    std::iter_swap(deck.begin() + static_cast<long>(pos), it);
  };
  move_front(Card::of(2, 1), 0);  // player 0, slot 0
  move_front(Card::of(3, 5), 2);  // player 0, slot 1
  auto s = new_game_from_deck(cfg, deck);
  ASSERT_EQ(s.card(0, 0), Card::of(2, 1));
  ASSERT_EQ(s.card(0, 1), Card::of(3, 5));
  const Card next = s.deck_order()[10];

  auto out = s.apply(Action::play(0));
  EXPECT_EQ(out.reward, 1);
  EXPECT_EQ(s.fireworks()[2], 1);
  EXPECT_EQ(s.card(0, 0), next);
  EXPECT_TRUE(s.last_action()->success);
  EXPECT_EQ(s.deck_remaining(), 39);

  s.apply(Action::hint_rank(0, s.card(0, 1).rank));
  EXPECT_EQ(s.hint_tokens(), 7);
  out = s.apply(Action::play(1));  // rank 5 on an empty firework
  EXPECT_EQ(out.reward, 0);
  EXPECT_EQ(s.life_tokens(), 2);
  EXPECT_EQ(s.discards()[card_column(cfg, Card::of(3, 5))], 1);
  EXPECT_FALSE(s.last_action()->success);

  s.apply(Action::discard(0));
  EXPECT_EQ(s.hint_tokens(), 8);
  EXPECT_TRUE(check_invariants(s).empty());
}

TEST(Apply, ThreeStrikesEndsGameAndStrictScoresZero) {
  auto cfg = mini();
  cfg.strict_scoring = true;
  // Find a deal where player 0 can score one point then miss three times.
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    auto s = new_game(cfg, seed);
    int misses = 0;
    bool scored = false;
    Rng rng(seed);
    while (!s.is_terminal()) {
      const int p = s.current_player();
      int playable = -1, dud = -1;
      for (int slot = 0; slot < cfg.hand(); ++slot) {
        const Card c = s.card(p, slot);
        if (c.is_null()) continue;
        if (s.fireworks()[static_cast<std::size_t>(c.color)] + 1 == c.rank) playable = slot;
        else dud = slot;
      }
      if (!scored && playable >= 0) {
        s.apply(Action::play(playable));
        scored = true;
      } else if (scored && dud >= 0) {
        s.apply(Action::play(dud));
        ++misses;
      } else {
        const auto acts = s.legal_actions(p);
        std::vector<Action> safe;
        for (const auto& a : acts)
          if (a.kind != ActionKind::kPlay) safe.push_back(a);
        s.apply(safe[static_cast<std::size_t>(rng.below(safe.size()))]);
      }
    }
    if (misses == 3 && scored) {
      EXPECT_EQ(s.life_tokens(), 0);
      EXPECT_GE(s.raw_score(), 1);
      EXPECT_EQ(s.score(), 0);
      EXPECT_THROW(s.apply(Action::discard(0)), TerminalStateError);
      return;
    }
  }
  FAIL() << "no suitable deal found";
}

int first_occupied(const GameState& s) {
  for (int k = 0; k < s.config().hand(); ++k)
    if (!s.card(s.current_player(), k).is_null()) return k;
  return -1;
}

TEST(Apply, FinalRoundGivesEachPlayerOneTurn) {
  auto cfg = mini();
  auto s = new_game(cfg, 2);
  EXPECT_EQ(s.final_turns_remaining(), -1);
  while (s.deck_remaining() > 0) s.apply(Action::discard(0));
  EXPECT_FALSE(s.is_terminal());
  EXPECT_EQ(s.final_turns_remaining(), cfg.n_players);
  const int turn = s.turn();
  while (!s.is_terminal()) s.apply(Action::discard(first_occupied(s)));
  EXPECT_EQ(s.turn() - turn, cfg.n_players);
}

TEST(HintMask, PositiveAndNegativeInformation) {
  const auto cfg = standard();
  auto s = new_game(cfg, 9);
  const Card target = s.card(1, 0);
  s.apply(Action::hint_color(1, target.color));
  const auto& hm = s.hint_mask();
  for (int slot = 0; slot < 5; ++slot) {
    const bool match = s.card(1, slot).color == target.color;
    const int row = 5 + slot;
    for (int col = 0; col < 25; ++col) {
      const bool col_match = column_card(cfg, col).color == target.color;
      EXPECT_EQ(hm.at(row, col) == 1, col_match == match) << "slot " << slot << " col " << col;
    }
    EXPECT_EQ(hm.at(row, 25), 0);
    if (match) { EXPECT_TRUE(s.last_action()->hinted_slots & (1u << slot)); }
  }
  // Player 0's rows are untouched.
  for (int col = 0; col < 25; ++col) EXPECT_EQ(hm.at(0, col), 1);
}

TEST(HintMask, RefilledSlotIsUnconstrained) {
  auto s = new_game(standard(), 4);
  s.apply(Action::hint_color(1, s.card(1, 2).color));
  s.apply(Action::discard(2));  // player 1 discards the hinted slot
  for (int col = 0; col < 25; ++col) EXPECT_EQ(s.hint_mask().at(7, col), 1);
  EXPECT_EQ(s.slot_fill_turn()[7], 1);
}

TEST(HintMask, EmptySlotOnlyAllowsNull) {
  auto cfg = mini();
  auto s = new_game(cfg, 8);
  while (s.deck_remaining() > 0) s.apply(Action::discard(0));
  const int p = s.current_player();
  s.apply(Action::discard(1));
  const int row = p * cfg.hand() + 1;
  EXPECT_TRUE(s.card(p, 1).is_null());
  EXPECT_EQ(s.hint_mask().at(row, cfg.null_column()), 1);
  for (int col = 0; col < cfg.num_card_types(); ++col) EXPECT_EQ(s.hint_mask().at(row, col), 0);
  const auto mask = legal_mask_from_view(cfg, s.hint_tokens(), s.occupied(p), s.visible_cards(p));
  EXPECT_EQ(mask[static_cast<std::size_t>(action_index(cfg, p, Action::play(1)))], 0);
  EXPECT_EQ(mask[static_cast<std::size_t>(action_index(cfg, p, Action::discard(1)))], 0);
  EXPECT_EQ(mask[static_cast<std::size_t>(action_index(cfg, p, Action::play(0)))], 1);
}

TEST(PublicFeatures, CandidatesExcludeFireworksAndDiscards) {
  auto s = new_game(standard(), 21);
  s.apply(Action::discard(0));
  const auto f = public_features(s);
  EXPECT_EQ(f.candidates.total(), 49);
  const Card gone = s.last_action()->revealed;
  EXPECT_EQ(f.candidates[card_column(standard(), gone)],
            copies_of_rank(gone.rank, 5) - 1);
}

TEST(PerfectGame, StackedDeckScoresMax) {
  const auto cfg = standard();
  std::vector<Card> deck;
  for (int c = 0; c < 5; ++c)
    for (int r = 1; r <= 5; ++r) deck.push_back(Card::of(c, r));
  for (int c = 0; c < 5; ++c)
    for (int r = 1; r <= 5; ++r)
      for (int k = 1; k < copies_of_rank(r, 5); ++k) deck.push_back(Card::of(c, r));
  auto s = new_game_from_deck(cfg, deck);
  // Each player always holds the next playable card.
  while (!s.is_terminal()) {
    const int p = s.current_player();
    int slot = -1;
    for (int k = 0; k < cfg.hand(); ++k) {
      const Card c = s.card(p, k);
      if (!c.is_null() && s.fireworks()[static_cast<std::size_t>(c.color)] + 1 == c.rank) slot = k;
    }
    ASSERT_GE(slot, 0);
    s.apply(Action::play(slot));
  }
  EXPECT_EQ(s.score(), 25);
  EXPECT_EQ(s.turn(), 25);
  EXPECT_EQ(s.life_tokens(), 3);
}

TEST(RandomPlay, InvariantsHold) {
  for (const auto& base : {standard(), mini()})
    for (int players : {2, 3, 4}) {
      GameConfig cfg = base;
      cfg.n_players = players;
      if (cfg.deck_size() < cfg.num_slots()) continue;
      for (std::uint64_t g = 0; g < 200; ++g) {
        auto s = new_game(cfg, g);
        Rng rng(g + 1000);
        while (!s.is_terminal()) {
          const auto acts = s.legal_actions(s.current_player());
          ASSERT_FALSE(acts.empty());
          for (const auto& a : acts)
            if (a.is_hint()) {
              ASSERT_NE(a.target, s.current_player());
            }
          s.apply(acts[static_cast<std::size_t>(rng.below(acts.size()))]);
          const auto errs = check_invariants(s);
          ASSERT_TRUE(errs.empty()) << errs.front();
          if (const auto& la = s.last_action(); la && la->action.is_hint()) { ASSERT_NE(la->hinted_slots, 0u); }
        }
      }
    }
}

TEST(ApplyAction, IsPure) {
  const auto s = new_game(standard(), 33);
  const auto h = state_hash(s);
  const auto t = apply_action(s, Action::discard(3));
  EXPECT_EQ(state_hash(s), h);
  EXPECT_NE(state_hash(t.state), h);
}

}  // namespace
}  // namespace bad::hanabi
