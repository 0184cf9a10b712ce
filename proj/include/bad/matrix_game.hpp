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

// Two-step cooperative matrix game. Each player holds one random bit; player
// one acts first, player two sees that action and acts; a single terminal
// reward is read from a 2x2x3x3 payoff tensor.

#include <array>
#include <cmath>
#include <fstream>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "bad/error.hpp"
#include "bad/rng.hpp"

namespace bad::matrix {

inline constexpr int kCards = 2;
inline constexpr int kActions = 3;

class PayoffTensor {
 public:
  PayoffTensor() { values_.fill(0.0); }

  static PayoffTensor constant(double c) {
    PayoffTensor t;
    t.values_.fill(c);
    return t;
  }

  double operator()(int card1, int card2, int u1, int u2) const {
    return values_[index(card1, card2, u1, u2)];
  }
  double& operator()(int card1, int card2, int u1, int u2) {
    return values_[index(card1, card2, u1, u2)];
  }

  // Nested [card1][card2][u1][u2] arrays.
  static PayoffTensor from_json(const nlohmann::json& j) {
    auto shape_error = [] { return ConfigError("payoff tensor must be nested 2x2x3x3 numbers"); };
    if (!j.is_array() || j.size() != kCards) throw shape_error();
    PayoffTensor t;
    for (int a = 0; a < kCards; ++a) {
      const auto& ja = j[static_cast<std::size_t>(a)];
      if (!ja.is_array() || ja.size() != kCards) throw shape_error();
      for (int b = 0; b < kCards; ++b) {
        const auto& jb = ja[static_cast<std::size_t>(b)];
        if (!jb.is_array() || jb.size() != kActions) throw shape_error();
        for (int u = 0; u < kActions; ++u) {
          const auto& ju = jb[static_cast<std::size_t>(u)];
          if (!ju.is_array() || ju.size() != kActions) throw shape_error();
          for (int v = 0; v < kActions; ++v) {
            const auto& x = ju[static_cast<std::size_t>(v)];
            if (!x.is_number()) throw shape_error();
            const double d = x.get<double>();
            if (!std::isfinite(d)) throw ConfigError("payoff values must be finite");
            t(a, b, u, v) = d;
          }
        }
      }
    }
    return t;
  }

  static PayoffTensor load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open payoff file " + path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("payoff file " + path + ": " + e.what());
    }
    return from_json(j);
  }

  nlohmann::json to_json() const {
    nlohmann::json j = nlohmann::json::array();
    for (int a = 0; a < kCards; ++a) {
      nlohmann::json ja = nlohmann::json::array();
      for (int b = 0; b < kCards; ++b) {
        nlohmann::json jb = nlohmann::json::array();
        for (int u = 0; u < kActions; ++u) {
          nlohmann::json ju = nlohmann::json::array();
          for (int v = 0; v < kActions; ++v) ju.push_back((*this)(a, b, u, v));
          jb.push_back(ju);
        }
        ja.push_back(jb);
      }
      j.push_back(ja);
    }
    return j;
  }

 private:
  static std::size_t index(int a, int b, int u, int v) {
    return static_cast<std::size_t>(((a * kCards + b) * kActions + u) * kActions + v);
  }
  std::array<double, kCards * kCards * kActions * kActions> values_{};
};

enum class Stage { kPlayer1, kPlayer2, kDone };

struct MGState {
  int card1 = 0;
  int card2 = 0;
  Stage stage = Stage::kPlayer1;
  std::optional<int> u1;
  int acting_player() const { return stage == Stage::kPlayer1 ? 0 : 1; }
};

struct MGStep {
  MGState state;
  std::optional<double> reward;
  bool done = false;
};

inline MGState mg_new(std::uint64_t seed) {
  Rng rng(seed);
  MGState s;
  s.card1 = static_cast<int>(rng.below(2));
  s.card2 = static_cast<int>(rng.below(2));
  return s;
}

inline MGState mg_new(const PayoffTensor&, std::uint64_t seed) { return mg_new(seed); }

inline MGStep mg_step(const MGState& s, const PayoffTensor& payoff, int player, int action) {
  if (action < 0 || action >= kActions) throw RuleViolation("matrix action out of range");
  if (s.stage == Stage::kDone) throw TerminalStateError("matrix game already finished");
  if (player != s.acting_player()) throw RuleViolation("player acted out of turn");
  MGStep out{s, std::nullopt, false};
  if (s.stage == Stage::kPlayer1) {
    out.state.u1 = action;
    out.state.stage = Stage::kPlayer2;
  } else {
    out.state.stage = Stage::kDone;
    out.reward = payoff(s.card1, s.card2, *s.u1, action);
    out.done = true;
  }
  return out;
}

// Distribution over one player's card.
struct ExactBelief {
  std::array<double, kCards> p{0.5, 0.5};

  double operator[](int card) const { return p[static_cast<std::size_t>(card)]; }
  static ExactBelief uniform() { return {}; }
  static ExactBelief point(int card) {
    ExactBelief b;
    b.p = {0.0, 0.0};
    b.p[static_cast<std::size_t>(card)] = 1.0;
    return b;
  }
};

// Posterior after seeing `observed` from a deterministic card -> action map.
inline ExactBelief mg_exact_public_update(const ExactBelief& prior,
                                          const std::array<int, kCards>& partial_policy,
                                          int observed) {
  ExactBelief post;
  double z = 0.0;
  for (int c = 0; c < kCards; ++c) {
    const double w = partial_policy[static_cast<std::size_t>(c)] == observed ? prior[c] : 0.0;
    post.p[static_cast<std::size_t>(c)] = w;
    z += w;
  }
  if (!(z > 0.0))
    throw InconsistentObservation("action " + std::to_string(observed) +
                                  " has zero probability under the partial policy");
  for (auto& v : post.p) v /= z;
  return post;
}

// Deterministic joint strategy: player one maps card1 -> u1, player two maps
// (card2, u1) -> u2.
struct JointStrategy {
  std::array<int, kCards> p1{};
  std::array<std::array<int, kActions>, kCards> p2{};
};

inline double mg_expected_value(const PayoffTensor& payoff, const JointStrategy& s) {
  double v = 0.0;
  for (int c1 = 0; c1 < kCards; ++c1)
    for (int c2 = 0; c2 < kCards; ++c2) {
      const int u1 = s.p1[static_cast<std::size_t>(c1)];
      const int u2 = s.p2[static_cast<std::size_t>(c2)][static_cast<std::size_t>(u1)];
      v += 0.25 * payoff(c1, c2, u1, u2);
    }
  return v;
}

struct OracleResult {
  double value = 0.0;
  JointStrategy best;
};

// Exhaustive search over all 9 x 729 deterministic joint strategies. With
// `signalling_free` player one is restricted to card-independent actions.
inline OracleResult mg_oracle(const PayoffTensor& payoff, bool signalling_free = false) {
  OracleResult best;
  bool first = true;
  JointStrategy s;
  for (int a = 0; a < kActions * kActions; ++a) {
    s.p1 = {a % kActions, a / kActions};
    if (signalling_free && s.p1[0] != s.p1[1]) continue;
    for (int b = 0; b < 729; ++b) {
      int code = b;
      for (int c2 = 0; c2 < kCards; ++c2)
        for (int u1 = 0; u1 < kActions; ++u1) {
          s.p2[static_cast<std::size_t>(c2)][static_cast<std::size_t>(u1)] = code % kActions;
          code /= kActions;
        }
      const double v = mg_expected_value(payoff, s);
      if (first || v > best.value) {
        best.value = v;
        best.best = s;
        first = false;
      }
    }
  }
  return best;
}

inline double mg_optimal_value(const PayoffTensor& payoff) { return mg_oracle(payoff).value; }

inline double mg_signalling_free_value(const PayoffTensor& payoff) {
  return mg_oracle(payoff, true).value;
}

}  // namespace bad::matrix
