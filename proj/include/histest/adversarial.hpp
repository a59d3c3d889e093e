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

// Hard instances for uniformity testing and the chi-metric oracle.
//
//   oneD          k/2 equal bins on [0,1], each with density 1+eps on one half
//                 and 1-eps on the other.
//   checkerboard  a defining vector (m_1..m_d), sum m, cuts the cube into a
//                 prod 2^{m_j} grid of 2^m bins; each bin is halved along every
//                 axis and its 2^d sub-bins get 1+eps or 1-eps by the parity of
//                 their half-indices, the heavy parity drawn per bin.
//                 k = 2^{m+d}.
//   regionQ       n axis-0 slabs of width 1/n, each an independent
//                 checkerboard squeezed into the slab. k = n 2^{m+d}.
//
// Every member is at L1 distance exactly eps from uniform.

#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "histest/geometry.hpp"
#include "histest/histogram.hpp"
#include "histest/rng.hpp"

namespace histest {

// C(n, r), throwing if the value does not fit in 63 bits.
inline std::uint64_t binomial(std::uint64_t n, std::uint64_t r) {
  if (r > n) return 0;
  r = std::min(r, n - r);
  unsigned __int128 acc = 1;
  for (std::uint64_t i = 1; i <= r; ++i) {
    acc = acc * (n - r + i) / i;  // exact: acc is C(n-r+i, i)
    if (acc > static_cast<unsigned __int128>(std::numeric_limits<std::int64_t>::max())) {
      throw std::overflow_error("binomial coefficient exceeds 2^63");
    }
  }
  return static_cast<std::uint64_t>(acc);
}

struct DefiningVector {
  std::vector<int> parts;

  int total() const { return std::accumulate(parts.begin(), parts.end(), 0); }
  friend bool operator==(const DefiningVector&, const DefiningVector&) = default;
};

// Number of defining vectors of total m in d coordinates.
inline std::uint64_t composition_count(int m, std::size_t d) {
  return binomial(static_cast<std::uint64_t>(m) + d - 1, d - 1);
}

// The rank-th composition of m into d nonnegative parts, lexicographic in
// (m_1, m_2, ...).
inline DefiningVector unrank_composition(int m, std::size_t d, std::uint64_t rank) {
  if (m < 0 || d < 1) throw std::invalid_argument("need m >= 0 and d >= 1");
  if (rank >= composition_count(m, d)) throw std::out_of_range("composition rank out of range");
  DefiningVector v;
  int rest = m;
  for (std::size_t j = 0; j + 1 < d; ++j) {
    const std::size_t tail = d - j - 1;  // parts still to place after this one
    int part = 0;
    while (true) {
      const std::uint64_t c = composition_count(rest - part, tail);
      if (rank < c) break;
      rank -= c;
      ++part;
    }
    v.parts.push_back(part);
    rest -= part;
  }
  v.parts.push_back(rest);
  return v;
}

inline DefiningVector sample_defining_vector(int m, std::size_t d, Rng& rng) {
  return unrank_composition(m, d, uniform_index(rng, composition_count(m, d)));
}

namespace detail {

inline void check_eps(double eps) {
  if (!(eps > 0.0 && eps <= 1.0)) throw std::invalid_argument("eps must be in (0,1]");
}

// Appends the checkerboard pieces for bins of `v` inside `box`, whose mass is
// its volume. heavy_parity has one entry per bin, in row-major bin order.
inline void append_checkerboard(std::vector<Piece>& out, const DefiningVector& v,
                                std::span<const std::uint8_t> heavy_parity, double eps,
                                const Rect& box) {
  const std::size_t d = v.parts.size();
  std::array<std::uint64_t, kMaxDim> side{};
  std::uint64_t bins = 1;
  for (std::size_t j = 0; j < d; ++j) {
    side[j] = std::uint64_t{1} << v.parts[j];
    bins *= side[j];
  }
  if (heavy_parity.size() != bins) throw std::invalid_argument("one parity bit per bin required");
  std::array<std::uint64_t, kMaxDim> bin{};
  for (std::uint64_t b = 0; b < bins; ++b) {
    std::uint64_t rest = b;
    for (std::size_t j = d; j-- > 0;) {
      bin[j] = rest % side[j];
      rest /= side[j];
    }
    for (std::uint32_t sub = 0; sub < (1u << d); ++sub) {
      Rect r{Point(d), Point(d)};
      int parity = 0;
      for (std::size_t j = 0; j < d; ++j) {
        const int h = static_cast<int>((sub >> (d - 1 - j)) & 1u);
        parity ^= h;
        const double w = box.extent(j) / static_cast<double>(2 * side[j]);
        const double lo = box.lo[j] + w * static_cast<double>(2 * bin[j] + h);
        r.lo[j] = lo;
        // Snap the last edge onto the box so pieces tile it exactly.
        r.hi[j] = (2 * bin[j] + h + 1 == 2 * side[j]) ? box.hi[j] : lo + w;
      }
      out.push_back({r, parity == heavy_parity[b] ? 1.0 + eps : 1.0 - eps});
    }
  }
}

inline std::vector<std::uint8_t> random_bits(std::size_t n, Rng& rng) {
  std::vector<std::uint8_t> bits(n);
  for (auto& b : bits) b = fair_coin(rng) ? 1 : 0;
  return bits;
}

}  // namespace detail

inline Histogram sample_oneD(std::size_t k, double eps, Rng& rng) {
  detail::check_eps(eps);
  if (k < 2 || k % 2 != 0) throw std::invalid_argument("oneD ensemble needs an even k >= 2");
  std::vector<Piece> pieces;
  const std::size_t bins = k / 2;
  for (std::size_t b = 0; b < bins; ++b) {
    const double lo = static_cast<double>(b) / static_cast<double>(bins);
    const double hi = b + 1 == bins ? 1.0 : static_cast<double>(b + 1) / static_cast<double>(bins);
    const double mid = static_cast<double>(2 * b + 1) / static_cast<double>(k);
    const bool first_heavy = fair_coin(rng);
    pieces.push_back({Rect{Point{lo}, Point{mid}}, first_heavy ? 1.0 + eps : 1.0 - eps});
    pieces.push_back({Rect{Point{mid}, Point{hi}}, first_heavy ? 1.0 - eps : 1.0 + eps});
  }
  return Histogram(1, std::move(pieces));
}

inline Histogram make_checkerboard(const DefiningVector& v, std::span<const std::uint8_t> parity,
                                   double eps) {
  detail::check_eps(eps);
  std::vector<Piece> pieces;
  detail::append_checkerboard(pieces, v, parity, eps, Rect::unit(v.parts.size()));
  return Histogram(v.parts.size(), std::move(pieces));
}

struct Checkerboard {
  DefiningVector vector;
  std::vector<std::uint8_t> parity;
  Histogram histogram;
};

inline Checkerboard sample_checkerboard_member(int m, std::size_t d, double eps, Rng& rng) {
  DefiningVector v = sample_defining_vector(m, d, rng);
  auto parity = detail::random_bits(std::size_t{1} << m, rng);
  Histogram h = make_checkerboard(v, parity, eps);
  return {std::move(v), std::move(parity), std::move(h)};
}

inline Histogram sample_checkerboard(int m, std::size_t d, double eps, Rng& rng) {
  return sample_checkerboard_member(m, d, eps, rng).histogram;
}

// Largest number of regions for which the regionQ lower bound applies.
inline std::uint64_t regionQ_max_regions(int m, std::size_t d) {
  return composition_count(m, d) / 4;
}

inline Histogram sample_regionQ(std::size_t n, int m, std::size_t d, double eps, Rng& rng,
                                std::ostream* warn = &std::cerr) {
  detail::check_eps(eps);
  if (n < 1) throw std::invalid_argument("regionQ needs n >= 1");
  if (warn && n > regionQ_max_regions(m, d)) {
    *warn << "warning: regionQ with n=" << n << " exceeds C(m+d-1,d-1)/4="
          << regionQ_max_regions(m, d) << "; members are valid but not a hard ensemble\n";
  }
  std::vector<Piece> pieces;
  for (std::size_t i = 0; i < n; ++i) {
    Rect slab = Rect::unit(d);
    slab.lo[0] = static_cast<double>(i) / static_cast<double>(n);
    slab.hi[0] = i + 1 == n ? 1.0 : static_cast<double>(i + 1) / static_cast<double>(n);
    const DefiningVector v = sample_defining_vector(m, d, rng);
    const auto parity = detail::random_bits(std::size_t{1} << m, rng);
    detail::append_checkerboard(pieces, v, parity, eps, slab);
  }
  return Histogram(d, std::move(pieces));
}

enum class EnsembleKind { kOneD, kCheckerboard, kRegionQ };

inline EnsembleKind parse_ensemble_kind(const std::string& s) {
  if (s == "oneD") return EnsembleKind::kOneD;
  if (s == "checkerboard") return EnsembleKind::kCheckerboard;
  if (s == "regionQ") return EnsembleKind::kRegionQ;
  throw std::invalid_argument("unknown ensemble '" + s + "' (oneD|checkerboard|regionQ)");
}

inline const char* to_string(EnsembleKind k) {
  switch (k) {
    case EnsembleKind::kOneD: return "oneD";
    case EnsembleKind::kCheckerboard: return "checkerboard";
    case EnsembleKind::kRegionQ: return "regionQ";
  }
  return "?";
}

struct EnsembleSpec {
  EnsembleKind kind = EnsembleKind::kRegionQ;
  std::size_t k = 0;
  std::size_t d = 1;
  double eps = 0.5;
  int m = 0;          // checkerboard / regionQ
  std::size_t n = 1;  // regionQ

  // Derives m (and n for regionQ, when n == 0) from k; throws if k does not
  // have the required form. For regionQ the default n is the largest one the
  // lower bound allows, or 1 if none does.
  static EnsembleSpec resolve(EnsembleKind kind, std::size_t k, std::size_t d, double eps,
                              std::size_t n = 0) {
    detail::check_eps(eps);
    EnsembleSpec s{kind, k, d, eps, 0, 1};
    if (kind == EnsembleKind::kOneD) {
      if (d != 1) throw std::invalid_argument("oneD ensemble is one-dimensional");
      if (k < 2 || k % 2) throw std::invalid_argument("oneD ensemble needs an even k");
      return s;
    }
    auto exponent = [](std::size_t v) {
      if (v == 0 || (v & (v - 1)) != 0) return -1;
      return std::countr_zero(v);
    };
    if (kind == EnsembleKind::kCheckerboard) {
      const int e = exponent(k);
      if (e < static_cast<int>(d)) throw std::invalid_argument("checkerboard needs k = 2^(m+d), m >= 0");
      s.m = e - static_cast<int>(d);
      return s;
    }
    if (n == 0) {
      n = 1;
      for (std::size_t cand = 1; cand <= k; ++cand) {
        if (k % cand) continue;
        const int e = exponent(k / cand);
        if (e < static_cast<int>(d)) continue;
        if (cand <= regionQ_max_regions(e - static_cast<int>(d), d)) n = std::max(n, cand);
      }
    }
    if (k % n) throw std::invalid_argument("regionQ needs k = n 2^(m+d)");
    const int e = exponent(k / n);
    if (e < static_cast<int>(d)) throw std::invalid_argument("regionQ needs k = n 2^(m+d)");
    s.n = n;
    s.m = e - static_cast<int>(d);
    return s;
  }
};

inline Histogram sample_ensemble(const EnsembleSpec& s, Rng& rng, std::ostream* warn = nullptr) {
  switch (s.kind) {
    case EnsembleKind::kOneD: return sample_oneD(s.k, s.eps, rng);
    case EnsembleKind::kCheckerboard: return sample_checkerboard(s.m, s.d, s.eps, rng);
    case EnsembleKind::kRegionQ: return sample_regionQ(s.n, s.m, s.d, s.eps, rng, warn);
  }
  throw std::logic_error("unreachable");
}

// chi_base(p, q) = integral of p q / base over the common refinement of all
// three. Throws std::domain_error where base vanishes but p q does not.
inline double chi_metric(const Histogram& base, const Histogram& p, const Histogram& q) {
  if (base.dim() != p.dim() || p.dim() != q.dim()) {
    throw std::invalid_argument("histograms have different dimensions");
  }
  double total = 0.0;
  for_each_common_cell(p, q, [&](const Rect& cell, double dp, double dq) {
    if (dp * dq == 0.0) return;
    base.index().for_each_overlapping(cell, [&](std::size_t i) {
      const double db = base.pieces()[i].density;
      const double vol = overlap_volume(cell, base.pieces()[i].rect);
      if (db <= 0.0) throw std::domain_error("chi metric diverges: base vanishes on the support");
      total += dp * dq / db * vol;
    });
  });
  return total;
}

}  // namespace histest
