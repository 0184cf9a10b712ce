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

#include <vector>

#include "bad/learner.hpp"

namespace bad::learn {
namespace {

Trajectory filled(int len, int valid, std::uint64_t seed) {
  Rng rng(seed);
  Trajectory tr(len, 3, 3, 2, 1);
  for (int t = 0; t < valid; ++t) {
    const auto i = static_cast<std::size_t>(t);
    tr.valid[i] = 1;
    for (int k = 0; k < 3; ++k) tr.input(t)[k] = static_cast<float>(rng.uniform());
    tr.legal_row(t)[0] = 1;
    tr.legal_row(t)[1] = 1;
    tr.actions[i] = static_cast<int>(rng.below(2));
    tr.rewards[i] = static_cast<float>(rng.below(2));
  }
  tr.terminal[static_cast<std::size_t>(valid - 1)] = 1;
  return tr;
}

TEST(Returns, DiscountedSum) {
  Trajectory tr(4, 1, 2, 0, 0);
  tr.valid = {1, 1, 1, 0};
  tr.rewards = {1.0f, 0.0f, 2.0f, 5.0f};
  tr.terminal = {0, 0, 1, 0};
  const auto r = discounted_returns(tr, 0.5);
  EXPECT_DOUBLE_EQ(r[2], 2.0);
  EXPECT_DOUBLE_EQ(r[1], 1.0);
  EXPECT_DOUBLE_EQ(r[0], 1.5);
  EXPECT_DOUBLE_EQ(r[3], 0.0);
}

TEST(Returns, TerminalStopsBootstrap) {
  Trajectory tr(3, 1, 2, 0, 0);
  tr.valid = {1, 1, 1};
  tr.rewards = {0.0f, 1.0f, 7.0f};
  tr.terminal = {0, 1, 0};
  const auto r = discounted_returns(tr, 1.0);
  EXPECT_DOUBLE_EQ(r[0], 1.0);
  EXPECT_DOUBLE_EQ(r[2], 7.0);
}

TEST(Loss, PaddingDoesNotChangeLoss) {
  nn::Mlp<double> net(nn::MlpShape{3, {5}, 3}, 1);
  std::vector<Trajectory> short_batch{filled(4, 4, 1), filled(4, 3, 2)};
  std::vector<Trajectory> long_batch{filled(9, 4, 1), filled(9, 3, 2)};
  LossWeights w;
  auto g1 = net.params().zeros_like(), g2 = net.params().zeros_like();
  const auto a = a2c_loss(short_batch, net, w, &g1);
  const auto b = a2c_loss(long_batch, net, w, &g2);
  EXPECT_NEAR(a.total, b.total, 1e-12);
  const auto fa = g1.flatten(), fb = g2.flatten();
  for (std::size_t k = 0; k < fa.size(); ++k) EXPECT_NEAR(fa[k], fb[k], 1e-12);
}

TEST(Loss, SingleLegalActionStepsSkipPolicy) {
  nn::Mlp<double> net(nn::MlpShape{3, {5}, 3}, 1);
  auto tr = filled(3, 3, 4);
  for (int t = 0; t < 3; ++t) {
    std::fill(tr.legal_row(t), tr.legal_row(t) + 3, 0);
    tr.legal_row(t)[2] = 1;
    tr.actions[static_cast<std::size_t>(t)] = 2;
  }
  const auto rep = a2c_loss({tr}, net, LossWeights{}, nullptr);
  EXPECT_EQ(rep.acting_steps, 0);
  EXPECT_EQ(rep.baseline_steps, 3);
  EXPECT_EQ(rep.pg_loss, 0.0);
}

TEST(Loss, IllegalRecordedActionThrows) {
  nn::Mlp<double> net(nn::MlpShape{3, {5}, 3}, 1);
  auto tr = filled(2, 2, 4);
  tr.actions[0] = 2;
  EXPECT_THROW(a2c_loss({tr}, net, LossWeights{}, nullptr), RuleViolation);
}

TEST(Loss, TrainingReducesBaselineError) {
  nn::Mlp<double> net(nn::MlpShape{3, {16}, 3}, 5);
  TrainConfig cfg;
  cfg.learning_rate = 1e-2;
  cfg.optimizer = "adam";
  Optimizer<double> opt(cfg);
  std::vector<Trajectory> batch{filled(5, 5, 1), filled(5, 4, 2), filled(5, 5, 3)};
  // Single legal action everywhere: only the value head is trained.
  for (auto& tr : batch)
    for (int t = 0; t < tr.length; ++t) {
      tr.legal_row(t)[1] = 0;
      tr.actions[static_cast<std::size_t>(t)] = 0;
    }
  LossWeights w;
  const double first = a2c_loss(batch, net, w, nullptr).baseline_loss;
  for (int k = 0; k < 300; ++k) {
    auto g = net.params().zeros_like();
    a2c_loss(batch, net, w, &g);
    opt.step(net.params(), g);
  }
  EXPECT_LT(a2c_loss(batch, net, w, nullptr).baseline_loss, 0.2 * first);
}

TEST(Config, Validation) {
  TrainConfig ok;
  EXPECT_NO_THROW(ok.validate());
  TrainConfig bad = ok;
  bad.optimizer = "sgd";
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = ok;
  bad.gamma = 1.5;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = ok;
  bad.hidden_layers = {};
  EXPECT_THROW(bad.validate(), ConfigError);
}

std::vector<Member<double>> population(const std::vector<double>& ratings) {
  std::vector<Member<double>> pop;
  for (std::size_t i = 0; i < ratings.size(); ++i) {
    Member<double> m;
    m.net = nn::Mlp<double>(nn::MlpShape{2, {3}, 2}, i + 1);
    m.optimizer = Optimizer<double>(TrainConfig{});
    m.learning_rate = 1e-3 * static_cast<double>(i + 1);
    m.entropy_weight = 0.01 * static_cast<double>(i + 1);
    m.rating = ratings[i];
    m.rated = true;
    pop.push_back(std::move(m));
  }
  return pop;
}

TEST(Pbt, CopiesFromBetterPeerAndPerturbs) {
  auto pop = population({1.0, 5.0});
  Rng rng(1);
  const auto ev = pbt_lite_evolve(pop, 0, rng, 0.5);
  ASSERT_TRUE(ev.copied);
  EXPECT_EQ(ev.source, 1);
  EXPECT_EQ(pop[0].net.params().flatten(), pop[1].net.params().flatten());
  EXPECT_DOUBLE_EQ(pop[0].rating, 5.0);
  EXPECT_TRUE(ev.lr_factor == 0.8 || ev.lr_factor == 1.25);
  EXPECT_TRUE(ev.entropy_factor == 0.8 || ev.entropy_factor == 1.25);
  EXPECT_DOUBLE_EQ(pop[0].learning_rate, 2e-3 * ev.lr_factor);
  EXPECT_DOUBLE_EQ(pop[0].entropy_weight, 0.02 * ev.entropy_factor);
}

TEST(Pbt, KeepsWeightsWhenPeerIsNotBetter) {
  auto pop = population({5.0, 5.2});
  const auto before = pop[0].net.params().flatten();
  Rng rng(1);
  const auto ev = pbt_lite_evolve(pop, 0, rng, 0.5);
  EXPECT_FALSE(ev.copied);
  EXPECT_EQ(pop[0].net.params().flatten(), before);
  auto single = population({0.0});
  EXPECT_FALSE(pbt_lite_evolve(single, 0, rng).copied);
}

TEST(Pbt, RatingEma) {
  Member<double> m;
  m.observe_episode(10.0, 0.1);
  EXPECT_DOUBLE_EQ(m.rating, 10.0);
  m.observe_episode(0.0, 0.1);
  EXPECT_DOUBLE_EQ(m.rating, 9.0);
}

}  // namespace
}  // namespace bad::learn
