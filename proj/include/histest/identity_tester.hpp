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

// Identity testing for d-dimensional k-histograms.
//
// The known p gets an oblivious covering F; every cell is split into a heavy
// and a light half, giving F'. A sample x maps to the half containing x of the
// cell containing x in a uniformly random z-grid, so the mapped distributions
// are p'(A) = p(A)/ell and q'(A) = q(A)/ell. If q is far from p, some at most
// 2kj halves carry an l1 discrepancy of eps_tv/(8 ell), which an l1^k tester
// detects.
//
// Distances at this API are L1 distances; eps_tv = eps/2 is applied here and
// nowhere else.

#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "histest/cell_splitting.hpp"
#include "histest/covering.hpp"
#include "histest/discrete_testers.hpp"
#include "histest/histogram.hpp"
#include "histest/rng.hpp"

namespace histest {

// Grid in the top 16 bits, cell index below, half bit last.
using HalfCellKey = std::uint64_t;

inline HalfCellKey half_key(const CellAddress& a, int half) {
  return (static_cast<std::uint64_t>(a.grid) << 47) | (a.cell << 1) |
         static_cast<std::uint64_t>(half);
}
inline CellAddress key_cell(HalfCellKey key) {
  return {static_cast<std::uint32_t>(key >> 47), (key >> 1) & ((std::uint64_t{1} << 46) - 1)};
}
inline int key_half(HalfCellKey key) { return static_cast<int>(key & 1); }

struct CellAddressHash {
  std::size_t operator()(const CellAddress& a) const {
    return std::hash<std::uint64_t>()(a.cell * 0x9E3779B97F4A7C15ULL ^ a.grid);
  }
};

// p' over the halves of the covering cells, with splits computed on demand.
// Not thread-safe: give each concurrent test its own instance.
class ReducedKnown {
 public:
  static constexpr std::size_t kCacheLimit = std::size_t{1} << 18;

  ReducedKnown(const Histogram& p, const Covering& cov) : p_(&p), cov_(&cov), sampler_(p) {}

  const Covering& covering() const { return *cov_; }
  const Histogram& reference() const { return *p_; }

  const SplitCell& split_of(const CellAddress& a) {
    auto it = cache_.find(a);
    if (it != cache_.end()) return it->second;
    if (cache_.size() >= kCacheLimit) cache_.clear();
    return cache_.emplace(a, split_cell(*p_, cov_->cell_rect(a))).first->second;
  }

  // The half of the grid's cell that contains x. A cell inside a single
  // piece of p splits at its axis-0 midpoint, which needs no cached split.
  HalfCellKey map_in_grid(const Point& x, std::uint32_t grid) {
    const CellAddress a = cov_->locate(grid, x);
    const std::size_t piece = p_->piece_at(x);
    const Rect r = cov_->cell_rect(a);
    if (piece != BoxIndex::npos && p_->pieces()[piece].rect.encloses(r, 0.0)) {
      const double vol = r.volume();
      return half_key(a, x[0] < axis0_cut(r, vol, vol / 2.0) ? 0 : 1);
    }
    return half_key(a, split_of(a).half_of(x, piece));
  }

  // A uniform random element of F' containing x.
  HalfCellKey map_sample(const Point& x, Rng& rng) {
    return map_in_grid(x, static_cast<std::uint32_t>(uniform_index(rng, cov_->grid_count())));
  }

  HalfCellKey sample(Rng& rng) { return map_sample(sampler_(rng), rng); }

  // p'(A) = p(A) / ell.
  double mass(HalfCellKey key) {
    const CellAddress a = key_cell(key);
    const Rect r = cov_->cell_rect(a);
    Point center(r.dim());
    for (std::size_t j = 0; j < r.dim(); ++j) center[j] = 0.5 * (r.lo[j] + r.hi[j]);
    const std::size_t piece = p_->piece_at(center);
    if (piece != BoxIndex::npos && p_->pieces()[piece].rect.encloses(r, 0.0)) {
      return p_->pieces()[piece].density * r.volume() / 2.0 / static_cast<double>(cov_->ell());
    }
    const SplitCell& sc = split_of(a);
    return (key_half(key) == 0 ? sc.heavy_mass : sc.light_mass) / static_cast<double>(cov_->ell());
  }

  std::span<const Rect> half_rects(HalfCellKey key) {
    const SplitCell& sc = split_of(key_cell(key));
    return key_half(key) == 0 ? std::span<const Rect>(sc.heavy) : std::span<const Rect>(sc.light);
  }

  // Dense p' and h' (h'(A) = h(A)/ell, same halves) over every element of F',
  // in covering enumeration order. Small coverings only.
  std::pair<std::vector<double>, std::vector<double>> exact_pair(const Histogram& h) {
    std::pair<std::vector<double>, std::vector<double>> out;
    const double ell = static_cast<double>(cov_->ell());
    cov_->for_each_cell([&](const CellAddress& a) {
      const SplitCell sc = split_cell(*p_, cov_->cell_rect(a));
      out.first.push_back(sc.heavy_mass / ell);
      out.first.push_back(sc.light_mass / ell);
      out.second.push_back(mass_on(h, sc.heavy) / ell);
      out.second.push_back(mass_on(h, sc.light) / ell);
    });
    return out;
  }

 private:
  const Histogram* p_;
  const Covering* cov_;
  HistogramSampler sampler_;
  std::unordered_map<CellAddress, SplitCell, CellAddressHash> cache_;
};

// Parameters of the reduction for an L1 threshold eps.
struct Reduction {
  double eps_tv = 0.0;
  double cover_eps = 0.0;  // covering slack eps_tv / 2
  int m = 0;
  std::uint64_t ell = 0;
  std::uint64_t j = 0;
  double K = 0.0;          // 2 k j
  double eps_l1k = 0.0;    // eps_tv / (8 ell)
};

inline Reduction reduction_for(std::size_t k, std::size_t dim, double eps) {
  if (!(eps > 0.0 && eps <= 1.0)) throw std::invalid_argument("eps must be in (0,1]");
  if (k < 1) throw std::invalid_argument("k must be at least 1");
  if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("bad dimension");
  Reduction r;
  r.eps_tv = eps / 2.0;
  r.cover_eps = r.eps_tv / 2.0;
  r.m = Covering::levels_for(k, dim, r.cover_eps);
  r.ell = 1;
  for (std::size_t i = 0; i < dim; ++i) r.ell *= static_cast<std::uint64_t>(r.m);
  r.j = (std::uint64_t{1} << dim) * r.ell;
  r.K = 2.0 * static_cast<double>(k) * static_cast<double>(r.j);
  r.eps_l1k = r.eps_tv / (8.0 * static_cast<double>(r.ell));
  return r;
}

struct IdentityParams {
  std::size_t k = 1;
  double eps = 0.5;  // L1
  double delta = 1.0 / 3.0;
  double C = kDefaultC;
};

inline L1kParams l1k_params_for(const Reduction& red, const IdentityParams& prm) {
  return {red.K, red.eps_l1k, prm.delta, prm.C};
}

inline double identity_expected_samples(const IdentityParams& prm, std::size_t dim) {
  return l1k_expected_samples(l1k_params_for(reduction_for(prm.k, dim, prm.eps), prm));
}

struct IdentityVerdict : TestVerdict {
  Reduction reduction;
};

// q_sampler: Rng& -> Point, the unknown distribution's sample source.
template <class QSampler>
  requires std::invocable<QSampler&, Rng&>
IdentityVerdict test_identity(const Histogram& p, QSampler&& q_sampler, const IdentityParams& prm,
                              Rng& rng) {
  IdentityVerdict v;
  v.reduction = reduction_for(prm.k, p.dim(), prm.eps);
  const Covering cov = Covering::with_levels(p, v.reduction.m);
  ReducedKnown known(p, cov);
  auto draw_q = [&](Rng& g) { return known.map_sample(q_sampler(g), g); };
  static_cast<TestVerdict&>(v) = l1k_identity_test(known, draw_q, l1k_params_for(v.reduction, prm), rng);
  return v;
}

inline IdentityVerdict test_identity(const Histogram& p, const Histogram& q,
                                     const IdentityParams& prm, Rng& rng) {
  const HistogramSampler qs(q);
  return test_identity(p, [&](Rng& g) { return qs(g); }, prm, rng);
}

template <class QSampler>
  requires std::invocable<QSampler&, Rng&>
IdentityVerdict test_uniformity(QSampler&& q_sampler, std::size_t dim, const IdentityParams& prm,
                                Rng& rng) {
  const Histogram u = Histogram::uniform(dim);
  return test_identity(u, std::forward<QSampler>(q_sampler), prm, rng);
}

// Identity testing on [m]^d: grid cells become boxes of side 1/m, and q's
// grid samples become uniform points inside their boxes. q_cell_sampler:
// Rng& -> cell coordinates (anything convertible to span<const size_t>).
template <class QCellSampler>
IdentityVerdict test_identity_discrete(std::span<const double> p_table, std::size_t dim,
                                       std::size_t m, QCellSampler&& q_cell_sampler,
                                       const IdentityParams& prm, Rng& rng) {
  const Histogram p = discretize(p_table, dim, m);
  auto q_points = [&](Rng& g) {
    const auto cell = q_cell_sampler(g);
    return embed_grid_point(std::span<const std::size_t>(cell), m, g);
  };
  return test_identity(p, q_points, prm, rng);
}

}  // namespace histest
