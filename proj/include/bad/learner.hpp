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

// Advantage actor-critic losses with analytic gradients, the optimiser step,
// and a small population-based-training loop.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "bad/error.hpp"
#include "bad/nn.hpp"
#include "bad/pubmdp.hpp"
#include "bad/rng.hpp"

namespace bad::learn {

struct TrainConfig {
  int batch_size = 32;
  double gamma = 0.999;
  double baseline_weight = 0.25;
  double entropy_weight = 0.05;
  double learning_rate = 2e-4;
  std::string optimizer = "rmsprop";  // or "adam"
  double rms_epsilon = 1e-10;
  double rms_momentum = 0.0;
  double rms_decay = 0.99;
  double adam_epsilon = 1e-8;
  double clip_norm = 40.0;  // <= 0 disables clipping
  bool cf_gradients = false;
  std::vector<int> hidden_layers{384, 384};
  double train_inv_temp = 1.0;
  double eval_inv_temp = 100.0;
  int population_size = 1;
  long evolve_interval = 0;  // updates between PBT considerations; 0 disables
  double rating_ema = 0.01;
  double pbt_threshold = 0.5;
  double pbt_warmup_fraction = 0.05;

  void validate() const {
    if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("train.gamma must be in (0, 1]");
    if (!(baseline_weight >= 0.0)) throw ConfigError("train.baseline_weight must be >= 0");
    if (!(entropy_weight >= 0.0)) throw ConfigError("train.entropy_weight must be >= 0");
    if (!(learning_rate > 0.0)) throw ConfigError("train.learning_rate must be > 0");
    if (optimizer != "rmsprop" && optimizer != "adam")
      throw ConfigError("train.optimizer must be 'rmsprop' or 'adam'");
    if (!(rms_epsilon > 0.0) || !(adam_epsilon > 0.0)) throw ConfigError("optimiser epsilon must be > 0");
    if (!(rms_decay > 0.0 && rms_decay < 1.0)) throw ConfigError("train.rms_decay must be in (0, 1)");
    if (!(rms_momentum >= 0.0 && rms_momentum < 1.0)) throw ConfigError("train.rms_momentum must be in [0, 1)");
    if (hidden_layers.empty()) throw ConfigError("train.hidden_layers must not be empty");
    for (int h : hidden_layers)
      if (h < 1) throw ConfigError("train.hidden_layers entries must be >= 1");
    if (!(train_inv_temp > 0.0) || !(eval_inv_temp > 0.0))
      throw ConfigError("inverse temperatures must be > 0");
    if (population_size < 1) throw ConfigError("train.population_size must be >= 1");
    if (evolve_interval < 0) throw ConfigError("train.evolve_interval must be >= 0");
    if (!(rating_ema > 0.0 && rating_ema <= 1.0)) throw ConfigError("train.rating_ema must be in (0, 1]");
    if (!(pbt_warmup_fraction >= 0.0 && pbt_warmup_fraction <= 1.0))
      throw ConfigError("train.pbt_warmup_fraction must be in [0, 1]");
  }
};

// One agent's view of an episode, padded to a fixed length. Inputs hold the
// full network input; the own-hand segment is visible to the baseline only.
struct Trajectory {
  int length = 0;
  int input_size = 0;
  int num_actions = 0;
  int own_offset = 0;
  int own_size = 0;
  std::vector<float> inputs;          // length x input_size
  std::vector<std::uint8_t> legal;    // length x num_actions
  std::vector<int> actions;           // length
  std::vector<float> rewards;         // length
  std::vector<std::uint8_t> terminal; // length
  std::vector<std::uint8_t> valid;    // length; 0 on padding

  // Counterfactual branches: for every private observation value, the input
  // it produces and the action the sampled partial policy assigns to it.
  int branches = 0;
  std::vector<float> cf_inputs;         // length x branches x input_size
  std::vector<std::uint8_t> cf_legal;   // length x branches x num_actions
  std::vector<int> cf_actions;          // length x branches
  std::vector<int> cf_actual;           // length; branch matching the real observation

  Trajectory() = default;
  Trajectory(int len, int inputs_, int actions_, int own_off, int own_sz, int branches_ = 0)
      : length(len), input_size(inputs_), num_actions(actions_), own_offset(own_off),
        own_size(own_sz), inputs(static_cast<std::size_t>(len) * inputs_, 0.0f),
        legal(static_cast<std::size_t>(len) * actions_, 0), actions(static_cast<std::size_t>(len), actions_ - 1),
        rewards(static_cast<std::size_t>(len), 0.0f), terminal(static_cast<std::size_t>(len), 0),
        valid(static_cast<std::size_t>(len), 0), branches(branches_) {
    if (branches_ > 0) {
      cf_inputs.assign(static_cast<std::size_t>(len) * branches_ * inputs_, 0.0f);
      cf_legal.assign(static_cast<std::size_t>(len) * branches_ * actions_, 0);
      cf_actions.assign(static_cast<std::size_t>(len) * branches_, -1);
      cf_actual.assign(static_cast<std::size_t>(len), -1);
    }
  }

  float* input(int t) { return inputs.data() + static_cast<std::size_t>(t) * input_size; }
  const float* input(int t) const { return inputs.data() + static_cast<std::size_t>(t) * input_size; }
  std::uint8_t* legal_row(int t) { return legal.data() + static_cast<std::size_t>(t) * num_actions; }
  const std::uint8_t* legal_row(int t) const { return legal.data() + static_cast<std::size_t>(t) * num_actions; }
  int valid_steps() const {
    int n = 0;
    for (auto v : valid) n += v;
    return n;
  }
  int legal_count(int t) const {
    int n = 0;
    for (int a = 0; a < num_actions; ++a) n += legal_row(t)[a];
    return n;
  }
};

// Discounted returns; zero on padding and reset after terminal steps.
inline std::vector<double> discounted_returns(const Trajectory& tr, double gamma) {
  std::vector<double> ret(static_cast<std::size_t>(tr.length), 0.0);
  double acc = 0.0;
  for (int t = tr.length - 1; t >= 0; --t) {
    const auto i = static_cast<std::size_t>(t);
    if (!tr.valid[i]) {
      acc = 0.0;
      continue;
    }
    if (tr.terminal[i]) acc = 0.0;
    acc = tr.rewards[i] + gamma * acc;
    ret[i] = acc;
  }
  return ret;
}

struct LossWeights {
  double gamma = 0.999;
  double baseline_weight = 0.25;
  double entropy_weight = 0.05;
  double inv_temp = 1.0;
  bool counterfactual = false;
};

struct LossReport {
  double pg_loss = 0.0;
  double baseline_loss = 0.0;
  double entropy = 0.0;  // mean per acting step
  double total = 0.0;
  int acting_steps = 0;
  int baseline_steps = 0;
};

// total = pg + baseline_weight * baseline - entropy_weight * entropy_sum, all
// summed over unmasked steps and divided by the number of trajectories.
//   pg       = -sum advantage * log pi(u | x)   (or sum over branches of
//              log pi(pi_hat(f) | x_f) with counterfactual gradients)
//   baseline = sum 0.5 (R - V(x with own hand))^2
// The policy pass sees inputs with the own-hand segment zeroed. Gradients of
// `total` are accumulated into `grads` when it is non-null.
template <class S>
LossReport a2c_loss(const std::vector<Trajectory>& batch, const nn::Mlp<S>& net,
                    const LossWeights& w, std::type_identity_t<nn::ParamSet<S>>* grads) {
  LossReport rep;
  if (batch.empty()) return rep;
  const int in = batch.front().input_size;
  const int na = batch.front().num_actions;
  const double norm = 1.0 / static_cast<double>(batch.size());

  struct PolicyRow {
    const float* x;
    const std::uint8_t* legal;
    int action;
    double advantage;
    bool entropy;  // contributes to the entropy bonus
  };
  std::vector<const float*> base_x;
  std::vector<double> base_r;
  std::vector<PolicyRow> rows;
  std::vector<std::size_t> row_owner;  // baseline index for the row's advantage
  int own_offset = batch.front().own_offset, own_size = batch.front().own_size;

  for (const auto& tr : batch) {
    if (tr.input_size != in || tr.num_actions != na)
      throw ConfigError("trajectories in a batch must share a layout");
    const auto ret = discounted_returns(tr, w.gamma);
    for (int t = 0; t < tr.length; ++t) {
      const auto i = static_cast<std::size_t>(t);
      if (!tr.valid[i]) continue;
      const std::size_t bidx = base_x.size();
      base_x.push_back(tr.input(t));
      base_r.push_back(ret[i]);
      if (tr.legal_count(t) <= 1) continue;
      ++rep.acting_steps;
      if (w.counterfactual && tr.branches > 0) {
        for (int b = 0; b < tr.branches; ++b) {
          const auto k = i * static_cast<std::size_t>(tr.branches) + static_cast<std::size_t>(b);
          rows.push_back({tr.cf_inputs.data() + k * static_cast<std::size_t>(in),
                          tr.cf_legal.data() + k * static_cast<std::size_t>(na), tr.cf_actions[k], 0.0,
                          b == tr.cf_actual[i]});
          row_owner.push_back(bidx);
        }
      } else {
        rows.push_back({tr.input(t), tr.legal_row(t), tr.actions[i], 0.0, true});
        row_owner.push_back(bidx);
      }
    }
  }
  rep.baseline_steps = static_cast<int>(base_x.size());
  if (base_x.empty()) return rep;

  // Baseline pass.
  nn::Matrix<S> xb(in, static_cast<long>(base_x.size()));
  for (std::size_t j = 0; j < base_x.size(); ++j)
    for (int k = 0; k < in; ++k) xb(k, static_cast<long>(j)) = static_cast<S>(base_x[j][k]);
  typename nn::Mlp<S>::Cache cache_b;
  const nn::Matrix<S> hb = net.trunk(xb, grads ? &cache_b : nullptr);
  const nn::Matrix<S> vb = net.value(hb);
  nn::Matrix<S> d_value(1, vb.cols());
  for (long j = 0; j < vb.cols(); ++j) {
    const double diff = static_cast<double>(vb(0, j)) - base_r[static_cast<std::size_t>(j)];
    rep.baseline_loss += 0.5 * diff * diff * norm;
    d_value(0, j) = static_cast<S>(w.baseline_weight * diff * norm);
  }
  for (std::size_t r = 0; r < rows.size(); ++r)
    rows[r].advantage = base_r[row_owner[r]] - static_cast<double>(vb(0, static_cast<long>(row_owner[r])));

  // Policy pass.
  nn::Matrix<S> d_logits;
  typename nn::Mlp<S>::Cache cache_p;
  nn::Matrix<S> hp;
  if (!rows.empty()) {
    nn::Matrix<S> xp(in, static_cast<long>(rows.size()));
    for (std::size_t j = 0; j < rows.size(); ++j) {
      for (int k = 0; k < in; ++k) xp(k, static_cast<long>(j)) = static_cast<S>(rows[j].x[k]);
      for (int k = own_offset; k < own_offset + own_size; ++k) xp(k, static_cast<long>(j)) = S(0);
    }
    hp = net.trunk(xp, grads ? &cache_p : nullptr);
    const nn::Matrix<S> logits = net.policy_logits(hp);
    d_logits = nn::Matrix<S>::Zero(na, logits.cols());
    std::vector<double> z(static_cast<std::size_t>(na)), logp(static_cast<std::size_t>(na));
    for (long j = 0; j < logits.cols(); ++j) {
      const auto& row = rows[static_cast<std::size_t>(j)];
      double top = -1e300;
      for (int a = 0; a < na; ++a) {
        z[static_cast<std::size_t>(a)] =
            w.inv_temp * (row.legal[a] ? static_cast<double>(logits(a, j)) : pubmdp::kMaskedLogit);
        top = std::max(top, z[static_cast<std::size_t>(a)]);
      }
      double sum = 0.0;
      for (int a = 0; a < na; ++a) sum += std::exp(z[static_cast<std::size_t>(a)] - top);
      const double lse = top + std::log(sum);
      double entropy = 0.0;
      for (int a = 0; a < na; ++a) {
        logp[static_cast<std::size_t>(a)] = z[static_cast<std::size_t>(a)] - lse;
        if (row.legal[a]) entropy -= std::exp(logp[static_cast<std::size_t>(a)]) * logp[static_cast<std::size_t>(a)];
      }
      if (!row.legal[row.action]) throw RuleViolation("trajectory action is masked as illegal");
      rep.pg_loss -= row.advantage * logp[static_cast<std::size_t>(row.action)] * norm;
      if (row.entropy) rep.entropy += entropy;
      for (int a = 0; a < na; ++a) {
        if (!row.legal[a]) continue;
        const double p = std::exp(logp[static_cast<std::size_t>(a)]);
        double g = -row.advantage * ((a == row.action ? 1.0 : 0.0) - p);
        if (row.entropy) g += w.entropy_weight * p * (logp[static_cast<std::size_t>(a)] + entropy);
        d_logits(a, j) = static_cast<S>(g * norm * w.inv_temp);
      }
    }
  }
  const double entropy_sum = rep.entropy * norm;
  rep.total = rep.pg_loss + w.baseline_weight * rep.baseline_loss - w.entropy_weight * entropy_sum;
  if (rep.acting_steps > 0) rep.entropy /= rep.acting_steps;
  if (!std::isfinite(rep.total)) throw NumericalError("non-finite loss; training halted");

  if (grads) {
    const nn::Matrix<S> dhb = net.backward_head(false, hb, d_value, *grads);
    net.backward_trunk(cache_b, dhb, *grads);
    if (!rows.empty()) {
      const nn::Matrix<S> dhp = net.backward_head(true, hp, d_logits, *grads);
      net.backward_trunk(cache_p, dhp, *grads);
    }
  }
  return rep;
}

// Counterfactual policy-gradient loss alone (no baseline or entropy terms).
template <class S>
double cf_pg_loss(const std::vector<Trajectory>& batch, const nn::Mlp<S>& net, double gamma,
                  std::type_identity_t<nn::ParamSet<S>>* grads = nullptr) {
  LossWeights w;
  w.gamma = gamma;
  w.baseline_weight = 0.0;
  w.entropy_weight = 0.0;
  w.counterfactual = true;
  return a2c_loss(batch, net, w, grads).pg_loss;
}

// RMSProp or Adam with optional global-norm clipping. Steps whose gradients
// are not finite are skipped and counted.
template <class S>
class Optimizer {
 public:
  Optimizer() = default;
  explicit Optimizer(const TrainConfig& cfg) : clip_(cfg.clip_norm) {
    if (cfg.optimizer == "adam") {
      nn::AdamConfig a;
      a.learning_rate = cfg.learning_rate;
      a.epsilon = cfg.adam_epsilon;
      impl_ = nn::Adam<S>(a);
    } else {
      nn::RmsPropConfig r;
      r.learning_rate = cfg.learning_rate;
      r.decay = cfg.rms_decay;
      r.momentum = cfg.rms_momentum;
      r.epsilon = cfg.rms_epsilon;
      impl_ = nn::RmsProp<S>(r);
    }
  }

  void set_learning_rate(double lr) {
    std::visit([lr](auto& o) { o.config().learning_rate = lr; }, impl_);
  }

  // Returns false when the step was skipped.
  bool step(nn::ParamSet<S>& params, nn::ParamSet<S>& grads) {
    if (!grads.all_finite()) {
      ++skipped_;
      return false;
    }
    last_norm_ = nn::clip_global_norm(grads, clip_);
    std::visit([&](auto& o) { o.step(params, grads); }, impl_);
    return true;
  }

  long skipped() const { return skipped_; }
  double last_grad_norm() const { return last_norm_; }

 private:
  std::variant<nn::RmsProp<S>, nn::Adam<S>> impl_{nn::RmsProp<S>{}};
  double clip_ = 40.0;
  long skipped_ = 0;
  double last_norm_ = 0.0;
};

template <class S>
bool optimizer_step(nn::ParamSet<S>& params, nn::ParamSet<S>& grads, Optimizer<S>& opt) {
  return opt.step(params, grads);
}

// ---------------------------------------------------------------------------
// PBT-lite.

template <class S>
struct Member {
  nn::Mlp<S> net;
  Optimizer<S> optimizer;
  double learning_rate = 2e-4;
  double entropy_weight = 0.05;
  double rating = 0.0;
  bool rated = false;
  long updates = 0;

  void observe_episode(double reward, double ema) {
    if (!rated) {
      rating = reward;
      rated = true;
    } else {
      rating += ema * (reward - rating);
    }
  }
};

struct EvolveEvent {
  bool copied = false;
  int target = -1;  // member that was overwritten
  int source = -1;
  double lr_factor = 1.0;
  double entropy_factor = 1.0;
};

// Considers member `target`: picks a random other member and, when its
// rating is at least `threshold` higher, copies its weights, optimiser state
// and hyperparameters, then perturbs learning rate and entropy weight by a
// factor drawn from {0.8, 1.25}.
template <class S>
EvolveEvent pbt_lite_evolve(std::vector<Member<S>>& population, int target, Rng& rng,
                            double threshold = 0.5) {
  EvolveEvent ev;
  ev.target = target;
  const int n = static_cast<int>(population.size());
  if (n < 2) return ev;
  int source = static_cast<int>(rng.below(static_cast<std::uint64_t>(n - 1)));
  if (source >= target) ++source;
  ev.source = source;
  auto& dst = population[static_cast<std::size_t>(target)];
  const auto& src = population[static_cast<std::size_t>(source)];
  if (!(src.rating >= dst.rating + threshold)) return ev;
  const double lr_f = rng.below(2) ? 1.25 : 0.8;
  const double ent_f = rng.below(2) ? 1.25 : 0.8;
  dst.net = src.net;
  dst.optimizer = src.optimizer;
  dst.learning_rate = src.learning_rate * lr_f;
  dst.entropy_weight = src.entropy_weight * ent_f;
  dst.optimizer.set_learning_rate(dst.learning_rate);
  dst.rating = src.rating;
  ev.copied = true;
  ev.lr_factor = lr_f;
  ev.entropy_factor = ent_f;
  return ev;
}

}  // namespace bad::learn
