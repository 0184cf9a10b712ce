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

// Feed-forward policy/baseline network with hand-written backpropagation.
// Batches are column-major: one column per example.

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "bad/error.hpp"
#include "bad/rng.hpp"

namespace bad::nn {

template <class S>
using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using Vector = Eigen::Matrix<S, Eigen::Dynamic, 1>;

struct MlpShape {
  int inputs = 0;
  std::vector<int> hidden{384, 384};
  int actions = 0;
  bool operator==(const MlpShape&) const = default;
};

// Named tensors in a fixed order; gradients and optimiser slots share it.
template <class S>
struct ParamSet {
  std::vector<std::string> names;
  std::vector<Matrix<S>> tensors;

  std::size_t size() const { return tensors.size(); }
  long count() const {
    long n = 0;
    for (const auto& t : tensors) n += t.size();
    return n;
  }
  ParamSet zeros_like() const {
    ParamSet z;
    z.names = names;
    for (const auto& t : tensors) z.tensors.push_back(Matrix<S>::Zero(t.rows(), t.cols()));
    return z;
  }
  void set_zero() {
    for (auto& t : tensors) t.setZero();
  }
  bool all_finite() const {
    for (const auto& t : tensors)
      if (!t.allFinite()) return false;
    return true;
  }
  double squared_norm() const {
    double s = 0.0;
    for (const auto& t : tensors) s += static_cast<double>(t.squaredNorm());
    return s;
  }
  void add(const ParamSet& other, S scale = S(1)) {
    for (std::size_t i = 0; i < tensors.size(); ++i) tensors[i] += scale * other.tensors[i];
  }
  // Flat views for finite-difference checks and serialisation.
  std::vector<double> flatten() const {
    std::vector<double> out;
    for (const auto& t : tensors)
      for (long k = 0; k < t.size(); ++k) out.push_back(static_cast<double>(t.data()[k]));
    return out;
  }
  void unflatten(const std::vector<double>& flat) {
    std::size_t i = 0;
    for (auto& t : tensors)
      for (long k = 0; k < t.size(); ++k) t.data()[k] = static_cast<S>(flat[i++]);
  }
  template <class T>
  ParamSet<T> cast() const {
    ParamSet<T> out;
    out.names = names;
    for (const auto& t : tensors) out.tensors.push_back(t.template cast<T>());
    return out;
  }
};

template <class S>
class Mlp {
 public:
  // Per-layer inputs and pre-activations kept for the backward pass.
  struct Cache {
    std::vector<Matrix<S>> inputs;
    std::vector<Matrix<S>> pre;
    Matrix<S> out;
  };

  Mlp() = default;

  Mlp(MlpShape shape, std::uint64_t seed) : shape_(std::move(shape)) {
    if (shape_.inputs < 1 || shape_.actions < 1) throw ConfigError("network needs inputs and actions");
    Rng rng(seed);
    int prev = shape_.inputs;
    for (std::size_t k = 0; k < shape_.hidden.size(); ++k) {
      add_linear("trunk." + std::to_string(k), shape_.hidden[k], prev, rng, 1.0);
      prev = shape_.hidden[k];
    }
    add_linear("policy", shape_.actions, prev, rng, 0.1);
    add_linear("value", 1, prev, rng, 0.1);
  }

  const MlpShape& shape() const { return shape_; }
  const ParamSet<S>& params() const { return params_; }
  ParamSet<S>& params() { return params_; }
  int trunk_width() const { return shape_.hidden.empty() ? shape_.inputs : shape_.hidden.back(); }

  // ReLU trunk; x is inputs x batch.
  Matrix<S> trunk(const Matrix<S>& x, Cache* cache = nullptr) const {
    Matrix<S> h = x;
    if (cache) {
      cache->inputs.clear();
      cache->pre.clear();
    }
    for (std::size_t k = 0; k < shape_.hidden.size(); ++k) {
      const auto& w = params_.tensors[2 * k];
      const auto& b = params_.tensors[2 * k + 1];
      Matrix<S> z = w * h;
      z.colwise() += b.col(0);
      if (cache) {
        cache->inputs.push_back(h);
        cache->pre.push_back(z);
      }
      h = z.cwiseMax(S(0));
    }
    if (cache) cache->out = h;
    return h;
  }

  Matrix<S> policy_logits(const Matrix<S>& h) const { return head(policy_index(), h); }
  Matrix<S> value(const Matrix<S>& h) const { return head(value_index(), h); }

  // Accumulates head gradients and returns d(loss)/d(trunk output).
  Matrix<S> backward_head(bool policy, const Matrix<S>& h, const Matrix<S>& d_out,
                          ParamSet<S>& grads) const {
    const std::size_t idx = policy ? policy_index() : value_index();
    grads.tensors[idx].noalias() += d_out * h.transpose();
    grads.tensors[idx + 1].col(0) += d_out.rowwise().sum();
    return params_.tensors[idx].transpose() * d_out;
  }

  void backward_trunk(const Cache& cache, Matrix<S> d_h, ParamSet<S>& grads) const {
    for (std::size_t k = shape_.hidden.size(); k-- > 0;) {
      d_h = d_h.cwiseProduct((cache.pre[k].array() > S(0)).template cast<S>().matrix());
      grads.tensors[2 * k].noalias() += d_h * cache.inputs[k].transpose();
      grads.tensors[2 * k + 1].col(0) += d_h.rowwise().sum();
      if (k > 0) d_h = params_.tensors[2 * k].transpose() * d_h;
    }
  }

  template <class T>
  Mlp<T> cast() const {
    Mlp<T> out;
    out.shape_ = shape_;
    out.params_ = params_.template cast<T>();
    return out;
  }

 private:
  template <class T>
  friend class Mlp;

  std::size_t policy_index() const { return 2 * shape_.hidden.size(); }
  std::size_t value_index() const { return policy_index() + 2; }

  Matrix<S> head(std::size_t idx, const Matrix<S>& h) const {
    Matrix<S> z = params_.tensors[idx] * h;
    z.colwise() += params_.tensors[idx + 1].col(0);
    return z;
  }

  // Glorot-uniform weights scaled by `gain`, zero biases.
  void add_linear(const std::string& name, int out, int in, Rng& rng, double gain) {
    const double limit = gain * std::sqrt(6.0 / (in + out));
    Matrix<S> w(out, in);
    for (long k = 0; k < w.size(); ++k)
      w.data()[k] = static_cast<S>((2.0 * rng.uniform() - 1.0) * limit);
    params_.names.push_back(name + ".w");
    params_.tensors.push_back(std::move(w));
    params_.names.push_back(name + ".b");
    params_.tensors.push_back(Matrix<S>::Zero(out, 1));
  }

  MlpShape shape_;
  ParamSet<S> params_;
};

// Scales gradients so their global L2 norm is at most `max_norm`; returns the
// norm before clipping. max_norm <= 0 disables clipping.
template <class S>
double clip_global_norm(ParamSet<S>& grads, double max_norm) {
  const double norm = std::sqrt(grads.squared_norm());
  if (max_norm > 0.0 && norm > max_norm) {
    const S scale = static_cast<S>(max_norm / norm);
    for (auto& t : grads.tensors) t *= scale;
  }
  return norm;
}

struct RmsPropConfig {
  double learning_rate = 2e-4;
  double decay = 0.99;
  double momentum = 0.0;
  double epsilon = 1e-10;
};

// ms <- decay * ms + (1 - decay) g^2;  mom <- momentum * mom + lr g / sqrt(ms + eps);
// theta <- theta - mom. Accumulators start at zero.
template <class S>
class RmsProp {
 public:
  explicit RmsProp(RmsPropConfig cfg = {}) : cfg_(cfg) {}
  RmsPropConfig& config() { return cfg_; }
  const RmsPropConfig& config() const { return cfg_; }

  void step(ParamSet<S>& params, const ParamSet<S>& grads) {
    if (ms_.size() != params.size()) {
      ms_ = params.zeros_like();
      mom_ = params.zeros_like();
    }
    const S decay = static_cast<S>(cfg_.decay);
    const S lr = static_cast<S>(cfg_.learning_rate);
    const S eps = static_cast<S>(cfg_.epsilon);
    const S momentum = static_cast<S>(cfg_.momentum);
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& ms = ms_.tensors[i];
      const auto& g = grads.tensors[i];
      ms = decay * ms + (S(1) - decay) * g.cwiseProduct(g);
      mom_.tensors[i] =
          momentum * mom_.tensors[i] + (lr * g.array() / (ms.array() + eps).sqrt()).matrix();
      params.tensors[i] -= mom_.tensors[i];
    }
  }

 private:
  RmsPropConfig cfg_;
  ParamSet<S> ms_;
  ParamSet<S> mom_;
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <class S>
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}
  AdamConfig& config() { return cfg_; }

  void step(ParamSet<S>& params, const ParamSet<S>& grads) {
    if (m_.size() != params.size()) {
      m_ = params.zeros_like();
      v_ = params.zeros_like();
    }
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double c2 = 1.0 - std::pow(cfg_.beta2, t_);
    const S lr_t = static_cast<S>(cfg_.learning_rate * std::sqrt(c2) / c1);
    const S b1 = static_cast<S>(cfg_.beta1), b2 = static_cast<S>(cfg_.beta2);
    const S eps = static_cast<S>(cfg_.epsilon);
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto& g = grads.tensors[i];
      m_.tensors[i] = b1 * m_.tensors[i] + (S(1) - b1) * g;
      v_.tensors[i] = b2 * v_.tensors[i] + (S(1) - b2) * g.cwiseProduct(g);
      params.tensors[i].array() -=
          lr_t * m_.tensors[i].array() / (v_.tensors[i].array().sqrt() + eps);
    }
  }

 private:
  AdamConfig cfg_;
  ParamSet<S> m_;
  ParamSet<S> v_;
  long t_ = 0;
};

}  // namespace bad::nn
