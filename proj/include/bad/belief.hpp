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

// Factorised public beliefs over hand slots. Every belief is a row per slot
// (player-major) and a column per card type plus a trailing null column for
// "no card in this slot".

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bad/error.hpp"
#include "bad/game.hpp"
#include "bad/rng.hpp"

namespace bad::belief {

using hanabi::CardMultiset;
using hanabi::HintMask;
using Table = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kConvergenceTolerance = 1e-9;

struct FactorisedBelief {
  Table probs;

  int slots() const { return static_cast<int>(probs.rows()); }
  int cols() const { return static_cast<int>(probs.cols()); }
  double operator()(int slot, int col) const { return probs(slot, col); }
};

struct LikelihoodTable {
  Table values;

  static LikelihoodTable ones(int slots, int cols) {
    return LikelihoodTable{Table::Ones(slots, cols)};
  }
  int slots() const { return static_cast<int>(values.rows()); }
  int cols() const { return static_cast<int>(values.cols()); }
};

struct BeliefConfig {
  int iterations = 100;
  double v1_mixin = 0.01;
  int sample_count = 3000;
  int eval_sample_count = 20000;
  int oversample_factor = 5;
  double likelihood_floor = 1e-10;
  double damping = 0.5;  // step size of the self-consistent update; 1 is the plain update

  void validate() const {
    if (iterations < 1) throw ConfigError("belief.iterations must be >= 1");
    if (!(v1_mixin >= 0.0 && v1_mixin <= 1.0)) throw ConfigError("belief.v1_mixin must be in [0, 1]");
    if (sample_count < 1 || eval_sample_count < 1)
      throw ConfigError("belief sample counts must be >= 1");
    if (oversample_factor < 1) throw ConfigError("belief.oversample_factor must be >= 1");
    if (!(likelihood_floor > 0.0)) throw ConfigError("belief.likelihood_floor must be > 0");
    if (!(damping > 0.0 && damping <= 1.0)) throw ConfigError("belief.damping must be in (0, 1]");
  }
  bool operator==(const BeliefConfig&) const = default;
};

// Joint hands as card columns per slot, with an importance weight each.
struct HandSamples {
  int slots = 0;
  int requested = 0;
  int accepted = 0;
  int attempted = 0;
  std::vector<std::uint8_t> columns;  // accepted * slots
  std::vector<double> weights;        // one per accepted hand

  std::span<const std::uint8_t> hand(int i) const {
    return {columns.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(slots),
            static_cast<std::size_t>(slots)};
  }
  bool complete() const { return accepted == requested; }
  bool empty() const { return accepted == 0; }
};

struct IterationStats {
  int iterations = 0;
  bool converged = false;
  std::vector<int> fallback_slots;
};

namespace detail {

inline void check_shapes(const CardMultiset& candidates, const HintMask& hm, int rows, int cols) {
  if (hm.rows != rows || hm.cols != cols)
    throw ConfigError("hint mask shape does not match belief shape");
  if (static_cast<int>(candidates.counts.size()) != cols - 1)
    throw ConfigError("candidate vector does not match belief columns");
}

inline Table mask_weights(const HintMask& hm) {
  Table m(hm.rows, hm.cols);
  for (int r = 0; r < hm.rows; ++r)
    for (int c = 0; c < hm.cols; ++c) m(r, c) = hm.at(r, c);
  return m;
}

// Row i proportional to C(f) * M(i, f); the null column carries M alone.
inline FactorisedBelief grounded(const CardMultiset& candidates, const Table& weights) {
  const int types = static_cast<int>(weights.cols()) - 1;
  FactorisedBelief b{Table(weights.rows(), weights.cols())};
  for (int i = 0; i < weights.rows(); ++i) {
    double z = 0.0;
    for (int f = 0; f < types; ++f) {
      b.probs(i, f) = std::max(0, candidates[f]) * weights(i, f);
      z += b.probs(i, f);
    }
    b.probs(i, types) = weights(i, types);
    z += b.probs(i, types);
    if (!(z > 0.0))
      throw DegenerateBelief("slot " + std::to_string(i) + " has no feasible card");
    b.probs.row(i) /= z;
  }
  return b;
}

// T(B)(i, f) proportional to max(0, C(f) - sum_{j != i} B(j, f)) * M(i, f);
// B^{k+1} = (1 - damping) B^k + damping T(B^k); damping 1 is the plain map.
// A row that clamps to all zeros keeps its previous value.
inline FactorisedBelief self_consistent(FactorisedBelief b, const CardMultiset& candidates,
                                        const Table& weights, int iterations, double damping,
                                        IterationStats* stats) {
  const int rows = b.slots();
  const int types = b.cols() - 1;
  std::vector<std::uint8_t> fell_back(static_cast<std::size_t>(rows), 0);
  Table next(rows, b.cols());
  int k = 0;
  bool converged = false;
  for (; k < iterations; ++k) {
    const Eigen::Array<double, 1, Eigen::Dynamic> held = b.probs.colwise().sum();
    for (int i = 0; i < rows; ++i) {
      double z = 0.0;
      for (int f = 0; f < types; ++f) {
        const double remaining = candidates[f] - (held(f) - b.probs(i, f));
        const double w = std::max(0.0, remaining) * weights(i, f);
        next(i, f) = w;
        z += w;
      }
      next(i, types) = weights(i, types);
      z += next(i, types);
      if (z > 0.0) {
        next.row(i) = (1.0 - damping) * b.probs.row(i) + (damping / z) * next.row(i);
      } else {
        next.row(i) = b.probs.row(i);
        fell_back[static_cast<std::size_t>(i)] = 1;
      }
    }
    const double delta = (next - b.probs).abs().maxCoeff();
    b.probs.swap(next);
    if (delta < kConvergenceTolerance) {
      converged = true;
      ++k;
      break;
    }
  }
  if (stats) {
    stats->iterations = k;
    stats->converged = converged;
    stats->fallback_slots.clear();
    for (int i = 0; i < rows; ++i)
      if (fell_back[static_cast<std::size_t>(i)]) stats->fallback_slots.push_back(i);
  }
  return b;
}

}  // namespace detail

inline FactorisedBelief v0_belief(const CardMultiset& candidates, const HintMask& hm) {
  detail::check_shapes(candidates, hm, hm.rows, hm.cols);
  return detail::grounded(candidates, detail::mask_weights(hm));
}

inline FactorisedBelief v1_iterate(const FactorisedBelief& belief, const CardMultiset& candidates,
                                   const HintMask& hm, int iterations, double damping = 0.5,
                                   IterationStats* stats = nullptr) {
  detail::check_shapes(candidates, hm, belief.slots(), belief.cols());
  return detail::self_consistent(belief, candidates, detail::mask_weights(hm), iterations, damping,
                                 stats);
}

inline FactorisedBelief bb_belief(const CardMultiset& candidates, const HintMask& hm,
                                  const LikelihoodTable& likelihood, int iterations,
                                  double damping = 0.5, IterationStats* stats = nullptr) {
  detail::check_shapes(candidates, hm, likelihood.slots(), likelihood.cols());
  const Table weights = detail::mask_weights(hm) * likelihood.values;
  return detail::self_consistent(detail::grounded(candidates, weights), candidates, weights,
                                 iterations, damping, stats);
}

inline FactorisedBelief v2_belief(const FactorisedBelief& bb, const FactorisedBelief& v1,
                                  double alpha) {
  if (bb.slots() != v1.slots() || bb.cols() != v1.cols())
    throw ConfigError("v2_belief needs beliefs of identical shape");
  FactorisedBelief out{(1.0 - alpha) * bb.probs + alpha * v1.probs};
  for (int i = 0; i < out.slots(); ++i) out.probs.row(i) /= out.probs.row(i).sum();
  return out;
}

inline LikelihoodTable reset_slot(LikelihoodTable table, int slot) {
  table.values.row(slot).setOnes();
  return table;
}

// Draws up to requested * oversample joint hands slot by slot and keeps the
// first `requested` that respect the candidate counts.
inline HandSamples sample_hands(const FactorisedBelief& belief, const CardMultiset& candidates,
                                int requested, int oversample, std::uint64_t seed) {
  const int slots = belief.slots();
  const int cols = belief.cols();
  const int types = cols - 1;
  HandSamples out;
  out.slots = slots;
  out.requested = requested;
  out.columns.reserve(static_cast<std::size_t>(requested) * static_cast<std::size_t>(slots));

  std::vector<double> cdf(static_cast<std::size_t>(slots * cols));
  for (int i = 0; i < slots; ++i) {
    double acc = 0.0;
    for (int c = 0; c < cols; ++c) {
      acc += std::max(0.0, belief.probs(i, c));
      cdf[static_cast<std::size_t>(i * cols + c)] = acc;
    }
  }
  Rng rng(seed);
  std::vector<int> used(static_cast<std::size_t>(types), 0);
  std::vector<std::uint8_t> hand(static_cast<std::size_t>(slots));
  const long max_attempts = static_cast<long>(requested) * oversample;
  while (out.accepted < requested && out.attempted < max_attempts) {
    ++out.attempted;
    std::fill(used.begin(), used.end(), 0);
    bool legal = true;
    for (int i = 0; i < slots; ++i) {
      const double* row = cdf.data() + static_cast<std::size_t>(i * cols);
      const double target = rng.uniform() * row[cols - 1];
      int c = 0;
      while (c < cols - 1 && !(target < row[c])) ++c;
      while (c > 0 && belief.probs(i, c) <= 0.0) --c;  // guard against rounding at the top
      hand[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(c);
      if (c < types && ++used[static_cast<std::size_t>(c)] > candidates[c]) legal = false;
    }
    if (!legal) continue;
    out.columns.insert(out.columns.end(), hand.begin(), hand.end());
    out.weights.push_back(1.0);
    ++out.accepted;
  }
  return out;
}

// Every candidate-consistent joint hand with positive belief mass, weighted by
// the product of its slot probabilities. Intended for small games.
inline HandSamples enumerate_hands(const FactorisedBelief& belief, const CardMultiset& candidates,
                                   long max_hands = 1'000'000) {
  const int slots = belief.slots();
  const int types = belief.cols() - 1;
  HandSamples out;
  out.slots = slots;
  std::vector<int> used(static_cast<std::size_t>(types), 0);
  std::vector<std::uint8_t> hand(static_cast<std::size_t>(slots));
  auto rec = [&](auto&& self, int i, double w) -> void {
    if (i == slots) {
      if (static_cast<long>(out.accepted) >= max_hands)
        throw ConfigError("enumerate_hands exceeded its hand limit");
      out.columns.insert(out.columns.end(), hand.begin(), hand.end());
      out.weights.push_back(w);
      ++out.accepted;
      return;
    }
    for (int c = 0; c <= types; ++c) {
      const double p = belief.probs(i, c);
      if (!(p > 0.0)) continue;
      if (c < types) {
        if (used[static_cast<std::size_t>(c)] >= candidates[c]) continue;
        ++used[static_cast<std::size_t>(c)];
      }
      hand[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(c);
      self(self, i + 1, w * p);
      if (c < types) --used[static_cast<std::size_t>(c)];
    }
  };
  rec(rec, 0, 1.0);
  out.requested = out.accepted;
  out.attempted = out.accepted;
  return out;
}

enum class LikelihoodScope {
  kObservedSlots,  // slots the actor can see: every hand but its own
  kAllSlots,
};

// Multiplies in P(observed | slot value) estimated from the samples:
//   E[1(f[i] = v) 1(pi(f^a) = u)] / E[1(f[i] = v)].
// `policy(hand)` returns the action index the partial policy picks for a joint
// hand. Values absent from every sample get multiplier 1.
template <class Policy>
  requires std::invocable<Policy&, std::span<const std::uint8_t>>
LikelihoodTable likelihood_update(const LikelihoodTable& table, const HandSamples& samples,
                                  Policy&& policy, int observed, int actor, int slots_per_player,
                                  double floor,
                                  LikelihoodScope scope = LikelihoodScope::kObservedSlots) {
  const int slots = table.slots();
  const int cols = table.cols();
  if (samples.slots != slots) throw ConfigError("samples do not match the likelihood table");
  Table num = Table::Zero(slots, cols);
  Table den = Table::Zero(slots, cols);
  for (int s = 0; s < samples.accepted; ++s) {
    const auto hand = samples.hand(s);
    const double w = samples.weights[static_cast<std::size_t>(s)];
    const bool hit = static_cast<int>(policy(hand)) == observed;
    for (int i = 0; i < slots; ++i) {
      const int v = hand[static_cast<std::size_t>(i)];
      den(i, v) += w;
      if (hit) num(i, v) += w;
    }
  }
  LikelihoodTable out = table;
  for (int i = 0; i < slots; ++i) {
    const bool own = i / slots_per_player == actor;
    if (scope == LikelihoodScope::kObservedSlots && own) continue;
    for (int v = 0; v < cols; ++v) {
      const double mult = den(i, v) > 0.0 ? num(i, v) / den(i, v) : 1.0;
      out.values(i, v) = std::max(out.values(i, v) * mult, floor);
    }
    out.values.row(i) /= out.values.row(i).maxCoeff();
  }
  return out;
}

// Mean over occupied slots of -ln p(true card), probabilities floored at 1e-12.
inline double cross_entropy(const FactorisedBelief& belief, std::span<const int> true_columns) {
  const int null_col = belief.cols() - 1;
  double total = 0.0;
  int n = 0;
  for (int i = 0; i < belief.slots(); ++i) {
    const int c = true_columns[static_cast<std::size_t>(i)];
    if (c == null_col) continue;
    total -= std::log(std::max(belief.probs(i, c), 1e-12));
    ++n;
  }
  return n > 0 ? total / n : 0.0;
}

}  // namespace bad::belief
