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

// Learning agents for the two-step matrix game: BAD with the exact public
// belief, BAD with counterfactual gradients, and a belief-free policy
// gradient baseline sharing the same network and rollout code.

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "bad/error.hpp"
#include "bad/learner.hpp"
#include "bad/matrix_game.hpp"
#include "bad/nn.hpp"
#include "bad/pubmdp.hpp"
#include "bad/rng.hpp"

namespace bad::matrix {

enum class MatrixAgent { kBad, kBadCf, kVanilla };

inline std::string to_string(MatrixAgent a) {
  switch (a) {
    case MatrixAgent::kBad: return "bad";
    case MatrixAgent::kBadCf: return "bad_cf";
    case MatrixAgent::kVanilla: return "vanilla";
  }
  return "?";
}

// Input: stage one-hot (2) | belief over card 1 (2) | belief over card 2 (2) |
// first action one-hot or "none" (4) | own card (2) | teammate card (2).
struct MatrixEncoder {
  static constexpr int kPublic = 10;
  static constexpr int kPrivate = 2;
  static constexpr int kOwn = 2;
  static constexpr int kInput = kPublic + kPrivate + kOwn;
  static constexpr int kNumActions = kActions + 1;  // last entry is no-action
  static constexpr int kNoAction = kActions;

  static std::vector<float> encode_public(int stage, const ExactBelief& b1, const ExactBelief& b2,
                                          int u1, bool with_beliefs) {
    std::vector<float> x(kPublic, 0.0f);
    x[static_cast<std::size_t>(stage)] = 1.0f;
    if (with_beliefs) {
      x[2] = static_cast<float>(b1[0]);
      x[3] = static_cast<float>(b1[1]);
      x[4] = static_cast<float>(b2[0]);
      x[5] = static_cast<float>(b2[1]);
    }
    x[static_cast<std::size_t>(6 + (u1 < 0 ? kActions : u1))] = 1.0f;
    return x;
  }
};

inline nn::MlpShape matrix_network_shape(const std::vector<int>& hidden) {
  return nn::MlpShape{MatrixEncoder::kInput, hidden, MatrixEncoder::kNumActions};
}

struct MatrixEpisode {
  MGState deal;
  std::array<int, kCards> pi1{};                         // first partial policy
  std::array<int, kCards> pi2{};                         // second, given u1
  int u1 = 0;
  int u2 = 0;
  double reward = 0.0;
  ExactBelief belief_after_u1;
  std::vector<learn::Trajectory> trajectories;  // one per player when recorded
};

namespace detail {

inline constexpr std::array<std::uint8_t, MatrixEncoder::kNumActions> kActLegal{1, 1, 1, 0};
inline constexpr std::array<std::uint8_t, MatrixEncoder::kNumActions> kWaitLegal{0, 0, 0, 1};

inline void write_input(float* dst, const std::vector<float>& pub, int own, int other) {
  std::copy(pub.begin(), pub.end(), dst);
  std::fill(dst + MatrixEncoder::kPublic, dst + MatrixEncoder::kInput, 0.0f);
  dst[MatrixEncoder::kPublic + own] = 1.0f;
  dst[MatrixEncoder::kPublic + MatrixEncoder::kPrivate + other] = 1.0f;
}

}  // namespace detail

// One episode. Both players sample a partial policy with the common step
// seed and realise it on every card value; the vanilla agent never sees the
// public belief.
template <class S>
MatrixEpisode play_matrix(const nn::Mlp<S>& net, const PayoffTensor& payoff, MatrixAgent kind,
                          std::uint64_t seed, double inv_temp, bool record) {
  const bool beliefs = kind != MatrixAgent::kVanilla;
  MatrixEpisode ep;
  MGState st = mg_new(payoff, hash_combine(seed, 0x6465616cULL));
  ep.deal = st;
  const std::array<int, 2> cards{st.card1, st.card2};
  const ExactBelief prior = ExactBelief::uniform();

  std::array<std::vector<float>, 2> pubs;
  std::array<std::array<int, kCards>, 2> realised{};
  ExactBelief b1 = prior;
  for (int stage = 0; stage < 2; ++stage) {
    pubs[static_cast<std::size_t>(stage)] =
        MatrixEncoder::encode_public(stage, b1, prior, stage == 0 ? -1 : ep.u1, beliefs);
    std::vector<S> pub_s(pubs[static_cast<std::size_t>(stage)].begin(),
                         pubs[static_cast<std::size_t>(stage)].end());
    pubmdp::PartialPolicy<S> pp(net, std::move(pub_s), pubmdp::step_seed(seed, stage), inv_temp);
    for (int c = 0; c < kCards; ++c) {
      std::array<S, MatrixEncoder::kPrivate> enc{};
      enc[static_cast<std::size_t>(c)] = S(1);
      const std::array<std::uint8_t, 1> key{static_cast<std::uint8_t>(c)};
      realised[static_cast<std::size_t>(stage)][static_cast<std::size_t>(c)] =
          pp.act(enc, key, detail::kActLegal);
    }
    const int u = realised[static_cast<std::size_t>(stage)][static_cast<std::size_t>(cards[static_cast<std::size_t>(stage)])];
    const auto step = mg_step(st, payoff, stage, u);
    st = step.state;
    if (stage == 0) {
      ep.u1 = u;
      if (beliefs) b1 = mg_exact_public_update(b1, realised[0], u);
      ep.belief_after_u1 = b1;
    } else {
      ep.u2 = u;
      ep.reward = *step.reward;
    }
  }
  ep.pi1 = realised[0];
  ep.pi2 = realised[1];

  if (record) {
    for (int p = 0; p < 2; ++p) {
      learn::Trajectory tr(2, MatrixEncoder::kInput, MatrixEncoder::kNumActions,
                           MatrixEncoder::kPublic + MatrixEncoder::kPrivate, MatrixEncoder::kOwn, kCards);
      const int own = cards[static_cast<std::size_t>(p)];
      const int other = cards[static_cast<std::size_t>(1 - p)];
      for (int t = 0; t < 2; ++t) {
        const auto& pub = pubs[static_cast<std::size_t>(t)];
        detail::write_input(tr.input(t), pub, own, other);
        const bool acting = t == p;
        const auto& legal = acting ? detail::kActLegal : detail::kWaitLegal;
        std::copy(legal.begin(), legal.end(), tr.legal_row(t));
        tr.actions[static_cast<std::size_t>(t)] = acting ? (t == 0 ? ep.u1 : ep.u2) : MatrixEncoder::kNoAction;
        tr.valid[static_cast<std::size_t>(t)] = 1;
        if (acting) {
          tr.cf_actual[static_cast<std::size_t>(t)] = own;
          for (int c = 0; c < kCards; ++c) {
            const auto k = static_cast<std::size_t>(t * kCards + c);
            detail::write_input(tr.cf_inputs.data() + k * MatrixEncoder::kInput, pub, c, other);
            std::copy(legal.begin(), legal.end(), tr.cf_legal.data() + k * MatrixEncoder::kNumActions);
            tr.cf_actions[k] = realised[static_cast<std::size_t>(t)][static_cast<std::size_t>(c)];
          }
        }
      }
      tr.rewards[1] = static_cast<float>(ep.reward);
      tr.terminal[1] = 1;
      ep.trajectories.push_back(std::move(tr));
    }
  }
  return ep;
}

// Expected payoff of the argmax policies over the four equally likely deals.
template <class S>
double greedy_value_exact(const nn::Mlp<S>& net, const PayoffTensor& payoff, MatrixAgent kind) {
  const bool beliefs = kind != MatrixAgent::kVanilla;
  auto argmax_action = [&](const std::vector<float>& pub, int card) {
    nn::Matrix<S> x(MatrixEncoder::kInput, 1);
    x.setZero();
    for (int k = 0; k < MatrixEncoder::kPublic; ++k) x(k, 0) = static_cast<S>(pub[static_cast<std::size_t>(k)]);
    x(MatrixEncoder::kPublic + card, 0) = S(1);
    const nn::Matrix<S> lg = net.policy_logits(net.trunk(x));
    int best = 0;
    for (int a = 1; a < kActions; ++a)
      if (lg(a, 0) > lg(best, 0)) best = a;
    return best;
  };
  const ExactBelief prior = ExactBelief::uniform();
  const auto pub0 = MatrixEncoder::encode_public(0, prior, prior, -1, beliefs);
  std::array<int, kCards> pi1{};
  for (int c = 0; c < kCards; ++c) pi1[static_cast<std::size_t>(c)] = argmax_action(pub0, c);
  double value = 0.0;
  for (int c1 = 0; c1 < kCards; ++c1) {
    const int u1 = pi1[static_cast<std::size_t>(c1)];
    const ExactBelief b1 = beliefs ? mg_exact_public_update(prior, pi1, u1) : prior;
    const auto pub1 = MatrixEncoder::encode_public(1, b1, prior, u1, beliefs);
    for (int c2 = 0; c2 < kCards; ++c2) value += 0.25 * payoff(c1, c2, u1, argmax_action(pub1, c2));
  }
  return value;
}

// Mean reward over `games` episodes at the evaluation temperature.
template <class S>
double evaluate_matrix(const nn::Mlp<S>& net, const PayoffTensor& payoff, MatrixAgent kind, int games,
                       std::uint64_t seed, double inv_temp) {
  double total = 0.0;
  for (int g = 0; g < games; ++g)
    total += play_matrix(net, payoff, kind, hash_combine(seed, static_cast<std::uint64_t>(g)), inv_temp, false).reward;
  return games > 0 ? total / games : 0.0;
}

struct MatrixTrainOptions {
  MatrixAgent kind = MatrixAgent::kBad;
  learn::TrainConfig train;
  long updates = 20000;
  std::uint64_t seed = 1;
  long eval_every = 500;
  int eval_games = 1000;
};

struct MatrixCurvePoint {
  long update = 0;
  double train_reward = 0.0;  // mean over the last evaluation window
  double eval_value = 0.0;    // mean over eval_games at the evaluation temperature
  double greedy_value = 0.0;  // exact value of the argmax policies
};

struct MatrixTrainResult {
  nn::Mlp<float> net;
  std::vector<MatrixCurvePoint> curve;
  double final_value = 0.0;  // mean over eval_games after training
  double final_greedy = 0.0;
  long skipped_steps = 0;
};

inline MatrixTrainResult train_matrix(const PayoffTensor& payoff, const MatrixTrainOptions& opt,
                                      const std::function<void(const MatrixCurvePoint&)>& on_eval = {}) {
  opt.train.validate();
  if (opt.updates < 0) throw ConfigError("updates must be >= 0");
  MatrixTrainResult res;
  res.net = nn::Mlp<float>(matrix_network_shape(opt.train.hidden_layers), hash_combine(opt.seed, 0x6e6574ULL));
  learn::Optimizer<float> optimizer(opt.train);
  learn::LossWeights w;
  w.gamma = opt.train.gamma;
  w.baseline_weight = opt.train.baseline_weight;
  w.entropy_weight = opt.train.entropy_weight;
  w.inv_temp = opt.train.train_inv_temp;
  w.counterfactual = opt.kind == MatrixAgent::kBadCf;

  const std::uint64_t eval_seed = hash_combine(opt.seed, 0x6576616cULL);
  double window_reward = 0.0;
  long window_n = 0;
  std::uint64_t episode = 0;
  std::vector<learn::Trajectory> batch;
  for (long u = 1; u <= opt.updates; ++u) {
    batch.clear();
    for (int e = 0; e < opt.train.batch_size; ++e) {
      auto ep = play_matrix(res.net, payoff, opt.kind, hash_combine(opt.seed, episode++), w.inv_temp, true);
      window_reward += ep.reward;
      ++window_n;
      for (auto& tr : ep.trajectories) batch.push_back(std::move(tr));
    }
    auto grads = res.net.params().zeros_like();
    learn::a2c_loss(batch, res.net, w, &grads);
    optimizer.step(res.net.params(), grads);
    if (opt.eval_every > 0 && (u % opt.eval_every == 0 || u == opt.updates)) {
      MatrixCurvePoint pt;
      pt.update = u;
      pt.train_reward = window_n > 0 ? window_reward / static_cast<double>(window_n) : 0.0;
      pt.eval_value = evaluate_matrix(res.net, payoff, opt.kind, opt.eval_games, eval_seed, opt.train.eval_inv_temp);
      pt.greedy_value = greedy_value_exact(res.net, payoff, opt.kind);
      window_reward = 0.0;
      window_n = 0;
      res.curve.push_back(pt);
      if (on_eval) on_eval(pt);
    }
  }
  res.final_value = evaluate_matrix(res.net, payoff, opt.kind, opt.eval_games, eval_seed, opt.train.eval_inv_temp);
  res.final_greedy = greedy_value_exact(res.net, payoff, opt.kind);
  res.skipped_steps = optimizer.skipped();
  return res;
}

}  // namespace bad::matrix
