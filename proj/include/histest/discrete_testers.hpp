// Copyright 2026 The histest Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Split (flattened) distributions, the Poissonized l2 closeness statistic and
// the l1^k identity tester built on top of them.

#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "histest/histogram.hpp"
#include "histest/rng.hpp"

namespace histest {

inline constexpr double kDefaultC = 16.0;

// A multiset over [n], stored as per-element copy counts.
using Multiset = std::vector<std::uint64_t>;

// floor(k * p_i) copies of each i; |S| <= k.
inline Multiset flattening_multiset(const DiscreteDist& p, double k) {
  if (!(k >= 1.0)) throw std::invalid_argument("flattening size must be at least 1");
  Multiset s(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    // The small bias keeps k * (1/k) from rounding down to zero.
    s[i] = static_cast<std::uint64_t>(std::floor(k * p[i] + 1e-9));
  }
  return s;
}

// p with element i split into a_i = 1 + S_i equal copies. Element (i, j) has
// flat index offset(i) + j.
class SplitDist {
 public:
  SplitDist(const DiscreteDist& base, const Multiset& s) : base_(base) {
    if (s.size() != base.size()) throw std::invalid_argument("multiset support mismatch");
    multiplicity_.resize(s.size());
    offset_.resize(s.size() + 1, 0);
    for (std::size_t i = 0; i < s.size(); ++i) {
      multiplicity_[i] = 1 + s[i];
      offset_[i + 1] = offset_[i] + multiplicity_[i];
    }
  }

  const DiscreteDist& base() const { return base_; }
  std::span<const std::uint64_t> multiplicities() const { return multiplicity_; }
  std::uint64_t size() const { return offset_.back(); }
  std::uint64_t offset(std::size_t i) const { return offset_[i]; }

  double prob(std::size_t i) const { return base_[i] / static_cast<double>(multiplicity_[i]); }

  // Dense probability vector over all n + |S| elements.
  std::vector<double> probs() const {
    std::vector<double> out;
    out.reserve(size());
    for (std::size_t i = 0; i < base_.size(); ++i) out.insert(out.end(), multiplicity_[i], prob(i));
    return out;
  }

 private:
  DiscreteDist base_;
  std::vector<std::uint64_t> multiplicity_;
  std::vector<std::uint64_t> offset_;
};

inline SplitDist split(const DiscreteDist& p, const Multiset& s) { return SplitDist(p, s); }

// Turns one sample i of p into one sample of the split distribution:
// the copy index is uniform in [0, a_i).
inline std::uint64_t split_sample(std::uint64_t a_i, Rng& rng) {
  return a_i <= 1 ? 0 : uniform_index(rng, a_i);
}

struct TestVerdict {
  bool reject = false;
  double statistic = 0.0;  // the median-rank repetition statistic
  double threshold = 0.0;
  std::uint64_t samples_used = 0;  // draws taken from the unknown stream
  std::uint64_t reference_samples = 0;  // draws simulated from the known side
  std::uint32_t repetitions = 0;
  std::uint32_t rejecting_repetitions = 0;
  double expected_samples = 0.0;  // repetitions * per-repetition Poisson mean

  const char* decision() const { return reject ? "reject" : "accept"; }
};

struct L2TestParams {
  double b = 1.0;       // upper bound on min(|p|_2, |q|_2)
  double eps = 0.1;     // l2 separation
  double delta = 1.0 / 3.0;
  double C = kDefaultC;
};

inline std::uint32_t repetitions_for(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must be in (0,1)");
  return static_cast<std::uint32_t>(std::ceil(18.0 * std::log(1.0 / delta)));
}

// Poisson mean of the per-repetition sample count.
inline double l2_samples_per_repetition(const L2TestParams& prm) {
  return prm.C * prm.b / (prm.eps * prm.eps);
}

// Rejection threshold for one repetition. The second term is sqrt(3) null
// standard deviations (Var Z = 8 m^2 |p|_2^2 <= 8 m^2 b^2), which keeps the
// per-repetition false-rejection rate below 1/3 even when C is small.
inline double l2_threshold(const L2TestParams& prm) {
  const double m = l2_samples_per_repetition(prm);
  return std::max(m * m * prm.eps * prm.eps / 2.0, std::sqrt(24.0) * m * prm.b);
}

// Z = sum_i (X_i - Y_i)^2 - X_i - Y_i over two sorted key lists.
template <class Key>
double collision_statistic(std::vector<Key>& xs, std::vector<Key>& ys) {
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  double z = 0.0;
  std::size_t a = 0, b = 0;
  while (a < xs.size() || b < ys.size()) {
    const bool take_x = b == ys.size() || (a < xs.size() && !(ys[b] < xs[a]));
    const Key& key = take_x ? xs[a] : ys[b];
    double x = 0.0, y = 0.0;
    while (a < xs.size() && !(key < xs[a]) && !(xs[a] < key)) ++a, ++x;
    while (b < ys.size() && !(key < ys[b]) && !(ys[b] < key)) ++b, ++y;
    z += (x - y) * (x - y) - x - y;
  }
  return z;
}

// Per-repetition statistics, exposed for calibration and unbiasedness checks.
template <class DrawP, class DrawQ>
double l2_repetition(DrawP&& draw_p, DrawQ&& draw_q, double mean, Rng& rng,
                     std::uint64_t* p_draws = nullptr, std::uint64_t* q_draws = nullptr) {
  using Key = std::decay_t<decltype(draw_p(rng))>;
  const std::uint64_t np = poisson(rng, mean);
  const std::uint64_t nq = poisson(rng, mean);
  std::vector<Key> xs, ys;
  xs.reserve(np);
  ys.reserve(nq);
  for (std::uint64_t t = 0; t < np; ++t) xs.push_back(draw_p(rng));
  for (std::uint64_t t = 0; t < nq; ++t) ys.push_back(draw_q(rng));
  if (p_draws) *p_draws += np;
  if (q_draws) *q_draws += nq;
  return collision_statistic(xs, ys);
}

// Distinguishes p = q from |p - q|_2 > eps using Poissonized samples, with a
// majority vote over ceil(18 ln(1/delta)) repetitions. draw_p/draw_q return
// totally ordered keys naming support elements.
template <class DrawP, class DrawQ>
TestVerdict l2_closeness_test(DrawP&& draw_p, DrawQ&& draw_q, const L2TestParams& prm, Rng& rng) {
  if (!(prm.b > 0.0)) throw std::invalid_argument("b must be positive");
  if (!(prm.eps > 0.0 && prm.eps < std::sqrt(2.0) * prm.b)) {
    throw std::invalid_argument("eps must lie in (0, sqrt(2) b)");
  }
  if (!(prm.C > 0.0)) throw std::invalid_argument("C must be positive");
  TestVerdict v;
  v.repetitions = repetitions_for(prm.delta);
  v.threshold = l2_threshold(prm);
  const double mean = l2_samples_per_repetition(prm);
  v.expected_samples = mean * v.repetitions;
  std::vector<double> stats;
  stats.reserve(v.repetitions);
  for (std::uint32_t r = 0; r < v.repetitions; ++r) {
    const double z = l2_repetition(draw_p, draw_q, mean, rng, &v.reference_samples, &v.samples_used);
    stats.push_back(z);
    if (z > v.threshold) ++v.rejecting_repetitions;
  }
  // The (floor(r/2)+1)-th largest Z exceeds the threshold iff a strict
  // majority of repetitions reject.
  const std::size_t rank = v.repetitions / 2;
  std::nth_element(stats.begin(), stats.begin() + static_cast<std::ptrdiff_t>(rank), stats.end(),
                   std::greater<>());
  v.statistic = stats[rank];
  v.reject = 2 * v.rejecting_repetitions > v.repetitions;
  return v;
}

// A known discrete distribution accessed lazily: draw a key, or ask the mass
// of a key. Keys must be totally ordered.
template <class D>
concept KnownDistribution = requires(D& d, Rng& rng) {
  { d.sample(rng) };
  { d.mass(d.sample(rng)) } -> std::convertible_to<double>;
};

// Adapter for an explicit DiscreteDist.
class ExplicitKnown {
 public:
  explicit ExplicitKnown(const DiscreteDist& p) : p_(&p), sampler_(p) {}
  std::size_t sample(Rng& rng) { return sampler_(rng); }
  double mass(std::size_t i) const { return (*p_)[i]; }

 private:
  const DiscreteDist* p_;
  DiscreteSampler sampler_;
};

struct L1kParams {
  double k = 1.0;  // size of the discrepancy set
  double eps = 0.1;
  double delta = 1.0 / 3.0;
  double C = kDefaultC;
};

inline L2TestParams l2_params_for(const L1kParams& prm) {
  if (!(prm.k >= 1.0)) throw std::invalid_argument("k must be at least 1");
  if (!(prm.eps > 0.0 && prm.eps <= 1.0)) throw std::invalid_argument("eps must be in (0,1]");
  return {1.0 / std::sqrt(prm.k), prm.eps / std::sqrt(2.0 * prm.k), prm.delta, prm.C};
}

// Expected draws from q for one l1^k test.
inline double l1k_expected_samples(const L1kParams& prm) {
  const L2TestParams l2 = l2_params_for(prm);
  return l2_samples_per_repetition(l2) * repetitions_for(prm.delta);
}

// Tests p = q against |p - q|_{1,k} >= eps. p is flattened with k copies of
// mass: element i is split into a_i = 1 + floor(k p_i) copies, so p_S has
// l2 norm at most 1/sqrt(k); both streams are split the same way and handed
// to the l2 closeness test.
template <KnownDistribution Known, class DrawQ>
TestVerdict l1k_identity_test(Known& p, DrawQ&& draw_q, const L1kParams& prm, Rng& rng) {
  const L2TestParams l2 = l2_params_for(prm);
  auto copies = [&](const auto& key) {
    return std::uint64_t{1} + static_cast<std::uint64_t>(std::floor(prm.k * p.mass(key) + 1e-9));
  };
  auto draw_p_split = [&](Rng& g) {
    auto key = p.sample(g);
    const std::uint64_t j = split_sample(copies(key), g);
    return std::pair{key, j};
  };
  auto draw_q_split = [&](Rng& g) {
    auto key = draw_q(g);
    const std::uint64_t j = split_sample(copies(key), g);
    return std::pair{key, j};
  };
  return l2_closeness_test(draw_p_split, draw_q_split, l2, rng);
}

inline TestVerdict l1k_identity_test(const DiscreteDist& p, const DiscreteDist& q,
                                     const L1kParams& prm, Rng& rng) {
  if (p.size() != q.size()) throw std::invalid_argument("support sizes differ");
  ExplicitKnown known(p);
  DiscreteSampler qs(q);
  return l1k_identity_test(known, [&](Rng& g) { return qs(g); }, prm, rng);
}

}  // namespace histest
