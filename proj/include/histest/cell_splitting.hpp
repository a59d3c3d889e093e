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

// Equal-volume heavy/light splits of a cell with respect to a known density.
//
// The heavy half collects the densest fragments of p inside the cell until it
// holds exactly half the volume; the fragment that straddles the halfway mark
// is cut by a hyperplane orthogonal to axis 0, its lower part going to the
// heavy half. If q is constant on the cell, one of the two halves carries at
// least a quarter of the cell's L1 discrepancy between p and q.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "histest/geometry.hpp"
#include "histest/histogram.hpp"

namespace histest {

struct SplitCell {
  Rect cell;
  std::vector<Rect> heavy;  // S1
  std::vector<Rect> light;  // S2
  double heavy_mass = 0.0;  // p(S1)
  double light_mass = 0.0;  // p(S2)
  double min_heavy_density = std::numeric_limits<double>::infinity();
  double max_light_density = 0.0;

  // Point classification without touching the rectangle lists: pieces of p
  // wholly in S1 (sorted), plus the one piece that was cut, if any.
  std::vector<std::size_t> heavy_pieces;
  std::size_t cut_piece = BoxIndex::npos;
  double cut = 0.0;

  // 0 for S1, 1 for S2; `piece` is the index of p's piece containing x.
  int half_of(const Point& x, std::size_t piece) const {
    if (piece == cut_piece) return x[0] < cut ? 0 : 1;
    return std::binary_search(heavy_pieces.begin(), heavy_pieces.end(), piece) ? 0 : 1;
  }
};

// Where the heavy half ends along axis 0 when a single fragment of volume
// `vol` has to contribute `need`; shared with callers that bypass split_cell.
inline double axis0_cut(const Rect& r, double vol, double need) {
  return r.lo[0] + need / (vol / r.extent(0));
}

inline SplitCell split_cell(const Histogram& p, const Rect& cell) {
  if (cell.dim() != p.dim()) throw std::invalid_argument("cell dimension mismatch");
  if (!(cell.volume() > 0.0)) throw std::invalid_argument("cell must have positive volume");

  struct Fragment {
    Rect rect;
    double density;
    std::size_t piece;
  };
  std::vector<Fragment> frags;
  p.index().for_each_overlapping(cell, [&](std::size_t i) {
    if (auto r = intersect(p.pieces()[i].rect, cell)) frags.push_back({*r, p.pieces()[i].density, i});
  });
  std::sort(frags.begin(), frags.end(), [](const Fragment& a, const Fragment& b) {
    if (a.density != b.density) return a.density > b.density;
    return a.rect.lo < b.rect.lo;
  });

  SplitCell sc;
  sc.cell = cell;
  const double target = cell.volume() / 2.0;
  // Below this the remaining need is rounding noise and no cut is made.
  const double slack = 1e-15 * std::max(1.0, cell.volume());
  double acc = 0.0;
  auto to_heavy = [&](const Rect& r, double density) {
    sc.heavy.push_back(r);
    sc.heavy_mass += density * r.volume();
    sc.min_heavy_density = std::min(sc.min_heavy_density, density);
  };
  auto to_light = [&](const Rect& r, double density) {
    sc.light.push_back(r);
    sc.light_mass += density * r.volume();
    sc.max_light_density = std::max(sc.max_light_density, density);
  };
  for (const Fragment& f : frags) {
    const double need = target - acc;
    const double vol = f.rect.volume();
    if (need <= slack) {
      to_light(f.rect, f.density);
    } else if (vol <= need + slack) {
      to_heavy(f.rect, f.density);
      sc.heavy_pieces.push_back(f.piece);
      acc += vol;
    } else {
      const double cut = axis0_cut(f.rect, vol, need);
      Rect lower = f.rect, upper = f.rect;
      lower.hi[0] = cut;
      upper.lo[0] = cut;
      to_heavy(lower, f.density);
      to_light(upper, f.density);
      sc.cut_piece = f.piece;
      sc.cut = cut;
      acc = target;
    }
  }
  std::sort(sc.heavy_pieces.begin(), sc.heavy_pieces.end());
  return sc;
}

struct SplitDiscrepancy {
  double heavy = 0.0;  // |p(S1) - q(S1)|
  double light = 0.0;  // |p(S2) - q(S2)|
  double total = 0.0;  // integral of |p - q| over the cell
};

namespace detail {

inline double abs_diff_on(const Histogram& p, const Histogram& q, std::span<const Rect> region) {
  double total = 0.0;
  for (const Rect& r : region) {
    p.index().for_each_overlapping(r, [&](std::size_t i) {
      const auto a = intersect(p.pieces()[i].rect, r);
      if (!a) return;
      q.index().for_each_overlapping(*a, [&](std::size_t j) {
        total += std::abs(p.pieces()[i].density - q.pieces()[j].density) *
                 overlap_volume(*a, q.pieces()[j].rect);
      });
    });
  }
  return total;
}

}  // namespace detail

// Exact discrepancy of a split. Throws std::domain_error unless q is
// constant on the cell.
inline SplitDiscrepancy split_discrepancy(const Histogram& p, const Histogram& q,
                                          const SplitCell& sc) {
  if (p.dim() != q.dim()) throw std::invalid_argument("histograms have different dimensions");
  double density = -1.0;
  q.index().for_each_overlapping(sc.cell, [&](std::size_t i) {
    const double d = q.pieces()[i].density;
    if (density < 0.0) {
      density = d;
    } else if (std::abs(d - density) > 1e-12 * std::max(1.0, density)) {
      throw std::domain_error("q is not constant on the cell");
    }
  });
  SplitDiscrepancy out;
  out.heavy = std::abs(mass_on(p, sc.heavy) - mass_on(q, sc.heavy));
  out.light = std::abs(mass_on(p, sc.light) - mass_on(q, sc.light));
  out.total = detail::abs_diff_on(p, q, std::span<const Rect>(&sc.cell, 1));
  return out;
}

}  // namespace histest
