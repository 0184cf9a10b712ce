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

// Synchronous self-play training for Hanabi under the public-belief MDP.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include "bad/error.hpp"
#include "bad/game.hpp"
#include "bad/learner.hpp"
#include "bad/nn.hpp"
#include "bad/pubmdp.hpp"
#include "bad/rng.hpp"
#include "bad/rollout.hpp"

namespace bad::train {

// Runs fn(i) for i in [0, n) on up to `workers` threads.
template <class Fn>
void parallel_for(int n, int workers, Fn&& fn) {
  workers = std::max(1, std::min(workers, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

inline nn::MlpShape hanabi_network_shape(const pubmdp::HanabiEncoder& enc, const std::vector<int>& hidden) {
  return nn::MlpShape{enc.input_size(), hidden, enc.config().num_actions()};
}

struct HanabiTrainOptions {
  hanabi::GameConfig game;
  belief::BeliefConfig belief;
  learn::TrainConfig train;
  pubmdp::BeliefVariant variant = pubmdp::BeliefVariant::kV2;
  int horizon = 65;
  long total_steps = 100000;  // environment turns across all members
  std::uint64_t seed = 1;
  int workers = 1;
  long log_every = 50;  // updates between metric rows
  bool track_cross_entropy = true;
};

struct TrainMetrics {
  long update = 0;
  long env_steps = 0;
  int member = 0;
  double mean_score = 0.0;
  double pg_loss = 0.0;
  double baseline_loss = 0.0;
  double entropy = 0.0;
  double ce_v0 = 0.0;
  double ce_v1 = 0.0;
  double ce_v2 = 0.0;
  double learning_rate = 0.0;
  double entropy_weight = 0.0;
  long skipped_steps = 0;
  double grad_norm = 0.0;
};

struct HanabiTrainResult {
  nn::Mlp<float> net;  // highest-rated member
  int best_member = 0;
  long env_steps = 0;
  long updates = 0;
  std::vector<TrainMetrics> metrics;
  std::vector<learn::EvolveEvent> evolutions;
};

inline rollout::AgentSpec training_spec(const HanabiTrainOptions& o) {
  rollout::AgentSpec spec;
  spec.variant = o.variant;
  spec.belief = o.belief;
  spec.sample_count = o.belief.sample_count;
  spec.inv_temp = o.train.train_inv_temp;
  spec.horizon = o.horizon;
  return spec;
}

inline HanabiTrainResult train_hanabi(const HanabiTrainOptions& opt,
                                      const std::function<void(const TrainMetrics&)>& on_metrics = {}) {
  opt.game.validate();
  opt.belief.validate();
  opt.train.validate();
  if (opt.horizon < 1) throw ConfigError("training horizon must be >= 1");
  const pubmdp::HanabiEncoder enc(opt.game, opt.horizon);
  const auto shape = hanabi_network_shape(enc, opt.train.hidden_layers);
  const int pop = opt.train.population_size;

  std::vector<learn::Member<float>> members;
  members.reserve(static_cast<std::size_t>(pop));
  for (int m = 0; m < pop; ++m) {
    learn::Member<float> mem;
    mem.net = nn::Mlp<float>(shape, hash_combine(opt.seed, 0x6e6574ULL + static_cast<std::uint64_t>(m)));
    mem.optimizer = learn::Optimizer<float>(opt.train);
    mem.learning_rate = opt.train.learning_rate;
    mem.entropy_weight = opt.train.entropy_weight;
    members.push_back(std::move(mem));
  }
  std::vector<std::uint64_t> episode_counter(static_cast<std::size_t>(pop), 0);
  Rng pbt_rng(hash_combine(opt.seed, 0x706274ULL));
  const auto spec = training_spec(opt);
  rollout::EpisodeOptions eo;
  eo.trajectories = true;
  eo.trajectory_length = opt.horizon;
  eo.cross_entropy = opt.track_cross_entropy;

  struct Window {
    double score = 0, pg = 0, base = 0, ent = 0, ce[3] = {0, 0, 0}, grad = 0;
    long episodes = 0, updates = 0, ce_n = 0;
  };
  std::vector<Window> windows(static_cast<std::size_t>(pop));

  HanabiTrainResult res;
  const long warmup = static_cast<long>(opt.train.pbt_warmup_fraction * static_cast<double>(opt.total_steps));
  const int batch = opt.train.batch_size;
  while (res.env_steps < opt.total_steps) {
    for (int m = 0; m < pop && res.env_steps < opt.total_steps; ++m) {
      auto& mem = members[static_cast<std::size_t>(m)];
      std::vector<rollout::EpisodeResult> episodes(static_cast<std::size_t>(batch));
      const std::uint64_t member_seed = hash_combine(opt.seed, 0x6d656d00ULL + static_cast<std::uint64_t>(m));
      const std::uint64_t first = episode_counter[static_cast<std::size_t>(m)];
      parallel_for(batch, opt.workers, [&](int i) {
        episodes[static_cast<std::size_t>(i)] = rollout::play_episode<float>(
            opt.game, enc, &mem.net, spec, hash_combine(member_seed, first + static_cast<std::uint64_t>(i)), eo);
      });
      episode_counter[static_cast<std::size_t>(m)] += static_cast<std::uint64_t>(batch);

      std::vector<learn::Trajectory> trajs;
      auto& win = windows[static_cast<std::size_t>(m)];
      for (auto& ep : episodes) {
        res.env_steps += ep.turns;
        mem.observe_episode(ep.raw_score, opt.train.rating_ema);
        win.score += ep.raw_score;
        ++win.episodes;
        for (const auto& c : ep.ce) {
          for (int k = 0; k < 3; ++k) win.ce[k] += c[static_cast<std::size_t>(k)];
          ++win.ce_n;
        }
        for (auto& tr : ep.trajectories) trajs.push_back(std::move(tr));
      }
      learn::LossWeights w;
      w.gamma = opt.train.gamma;
      w.baseline_weight = opt.train.baseline_weight;
      w.entropy_weight = mem.entropy_weight;
      w.inv_temp = opt.train.train_inv_temp;
      auto grads = mem.net.params().zeros_like();
      const auto rep = learn::a2c_loss(trajs, mem.net, w, &grads);
      mem.optimizer.step(mem.net.params(), grads);
      ++mem.updates;
      ++res.updates;
      win.pg += rep.pg_loss;
      win.base += rep.baseline_loss;
      win.ent += rep.entropy;
      win.grad += mem.optimizer.last_grad_norm();
      ++win.updates;

      if (pop > 1 && opt.train.evolve_interval > 0 && res.env_steps >= warmup &&
          mem.updates % opt.train.evolve_interval == 0) {
        const auto ev = learn::pbt_lite_evolve(members, m, pbt_rng, opt.train.pbt_threshold);
        if (ev.copied) res.evolutions.push_back(ev);
      }

      const bool last = res.env_steps >= opt.total_steps;
      if ((opt.log_every > 0 && mem.updates % opt.log_every == 0) || last) {
        TrainMetrics tm;
        tm.update = mem.updates;
        tm.env_steps = res.env_steps;
        tm.member = m;
        const double ne = std::max<long>(1, win.episodes), nu = std::max<long>(1, win.updates),
                     nc = std::max<long>(1, win.ce_n);
        tm.mean_score = win.score / ne;
        tm.pg_loss = win.pg / nu;
        tm.baseline_loss = win.base / nu;
        tm.entropy = win.ent / nu;
        tm.ce_v0 = win.ce[0] / nc;
        tm.ce_v1 = win.ce[1] / nc;
        tm.ce_v2 = win.ce[2] / nc;
        tm.learning_rate = mem.learning_rate;
        tm.entropy_weight = mem.entropy_weight;
        tm.skipped_steps = mem.optimizer.skipped();
        tm.grad_norm = win.grad / nu;
        res.metrics.push_back(tm);
        if (on_metrics) on_metrics(tm);
        win = Window{};
      }
    }
  }
  int best = 0;
  for (int m = 1; m < pop; ++m)
    if (members[static_cast<std::size_t>(m)].rating > members[static_cast<std::size_t>(best)].rating) best = m;
  res.best_member = best;
  res.net = members[static_cast<std::size_t>(best)].net;
  return res;
}

}  // namespace bad::train
