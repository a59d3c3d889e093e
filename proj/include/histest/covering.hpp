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

// Oblivious coverings of a known histogram by a union of grids.
//
// Each coordinate is cut into 2^i intervals of equal marginal mass for every
// level i < m, each level refining the previous one. For a level vector
// z in {0..m-1}^d the z-grid is the product of the per-coordinate level-z_j
// partitions, and the covering is the union of the cells of all m^d z-grids.
// Every point lies in exactly one cell per grid, hence in ell = m^d sets.
//
// Cells are never materialized: a cell is addressed by its grid and the
// per-coordinate interval indices packed into one integer, and its bounds are
// read off the shared breakpoint arrays.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "histest/geometry.hpp"
#include "histest/histogram.hpp"

namespace histest {

inline constexpr int kMaxLevels = 24;

namespace detail {

// Piecewise-linear CDF of the j-th marginal of a histogram.
struct MarginalCdf {
  std::vector<double> knots;       // sorted, knots.front() == 0, knots.back() == 1
  std::vector<double> cumulative;  // F(knots[s])

  MarginalCdf(const Histogram& p, std::size_t j) {
    knots = {0.0, 1.0};
    for (const Piece& piece : p.pieces()) {
      knots.push_back(piece.rect.lo[j]);
      knots.push_back(piece.rect.hi[j]);
    }
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
    // Each piece spreads its mass uniformly over [lo_j, hi_j).
    std::vector<double> rate(knots.size(), 0.0);
    for (const Piece& piece : p.pieces()) {
      const double r = piece.mass() / piece.rect.extent(j);
      const auto a = std::lower_bound(knots.begin(), knots.end(), piece.rect.lo[j]) - knots.begin();
      const auto b = std::lower_bound(knots.begin(), knots.end(), piece.rect.hi[j]) - knots.begin();
      rate[static_cast<std::size_t>(a)] += r;
      rate[static_cast<std::size_t>(b)] -= r;
    }
    cumulative.assign(knots.size(), 0.0);
    double current = 0.0;
    for (std::size_t s = 0; s + 1 < knots.size(); ++s) {
      current += rate[s];
      cumulative[s + 1] = cumulative[s] + std::max(0.0, current) * (knots[s + 1] - knots[s]);
    }
  }

  double total() const { return cumulative.back(); }

  // Leftmost x with F(x) = t * total, for t in (0,1).
  double quantile(double t) const {
    const double target = t * total();
    const auto it = std::lower_bound(cumulative.begin() + 1, cumulative.end(), target);
    const auto s = static_cast<std::size_t>(it - cumulative.begin());
    if (s >= cumulative.size()) return 1.0;
    const double seg_mass = cumulative[s] - cumulative[s - 1];
    const double width = knots[s] - knots[s - 1];
    if (seg_mass <= 0.0) return knots[s - 1];
    const double x = knots[s - 1] + (target - cumulative[s - 1]) / seg_mass * width;
    return std::clamp(x, knots[s - 1], knots[s]);
  }
};

}  // namespace detail

// Per-coordinate equal-mass dyadic partitions for levels 0..m-1. Only the
// finest level is stored; coarser levels take every 2^(m-1-i)-th boundary,
// which makes the refinement property exact.
class MarginalPartitions {
 public:
  MarginalPartitions(const Histogram& p, int levels) : levels_(levels) {
    if (levels < 1 || levels > kMaxLevels) {
      throw std::invalid_argument("levels must be in [1, " + std::to_string(kMaxLevels) + "]");
    }
    const std::uint64_t intervals = std::uint64_t{1} << (levels - 1);
    boundaries_.resize(p.dim());
    for (std::size_t j = 0; j < p.dim(); ++j) {
      const detail::MarginalCdf cdf(p, j);
      auto& b = boundaries_[j];
      b.resize(intervals + 1);
      b.front() = 0.0;
      b.back() = 1.0;
      for (std::uint64_t t = 1; t < intervals; ++t) {
        b[t] = cdf.quantile(static_cast<double>(t) / static_cast<double>(intervals));
      }
      // bucket_[j][t] is the interval containing t / T, T = intervals.
      auto& start = buckets_.emplace_back(intervals + 1);
      for (std::uint64_t t = 0; t < intervals; ++t) {
        start[t] = static_cast<std::uint32_t>(
            std::upper_bound(b.begin() + 1, b.end() - 1,
                             static_cast<double>(t) / static_cast<double>(intervals)) -
            (b.begin() + 1));
      }
      start[intervals] = static_cast<std::uint32_t>(intervals - 1);
    }
  }

  int levels() const { return levels_; }
  std::size_t dim() const { return boundaries_.size(); }

  // Boundary number b in [0, 2^level] of the level partition of coordinate j.
  double boundary(std::size_t j, int level, std::uint64_t b) const {
    return boundaries_[j][b << (levels_ - 1 - level)];
  }

  // The 2^level - 1 interior cut positions of a level.
  std::vector<double> cuts(std::size_t j, int level) const {
    std::vector<double> out;
    const std::uint64_t n = std::uint64_t{1} << level;
    for (std::uint64_t b = 1; b < n; ++b) out.push_back(boundary(j, level, b));
    return out;
  }

  // All 2^(m-1) + 1 boundaries of the finest level, endpoints included.
  std::span<const double> finest(std::size_t j) const { return boundaries_[j]; }

  // Finest-level interval containing x; points on a cut go right.
  std::uint64_t finest_index(std::size_t j, double x) const {
    const auto& b = boundaries_[j];
    const auto& start = buckets_[j];
    const std::uint64_t n = b.size() - 1;
    const double scaled = x * static_cast<double>(n);
    std::uint64_t t = scaled <= 0.0 ? 0 : std::min(n - 1, static_cast<std::uint64_t>(scaled));
    // x * n may round across a bucket edge; edges are the values t / n.
    const double dn = static_cast<double>(n);
    while (t > 0 && x < static_cast<double>(t) / dn) --t;
    while (t + 1 < n && x >= static_cast<double>(t + 1) / dn) ++t;
    // The answer lies between the intervals holding t/n and (t+1)/n.
    const auto it = std::upper_bound(b.begin() + 1 + start[t], b.begin() + 1 + start[t + 1], x);
    return static_cast<std::uint64_t>(it - (b.begin() + 1));
  }

  std::uint64_t interval_index(std::size_t j, int level, double x) const {
    return finest_index(j, x) >> (levels_ - 1 - level);
  }

 private:
  int levels_;
  std::vector<std::vector<double>> boundaries_;
  std::vector<std::vector<std::uint32_t>> buckets_;
};

using GridLevels = std::array<int, kMaxDim>;

struct CellAddress {
  std::uint32_t grid = 0;
  std::uint64_t cell = 0;  // per-coordinate interval indices, coordinate 0 most significant

  friend auto operator<=>(const CellAddress&, const CellAddress&) = default;
};

class Covering {
 public:
  // m = ceil(log2(4 k d / eps)), at least 1.
  static int levels_for(std::size_t k, std::size_t dim, double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("covering eps must be positive");
    if (k < 1) throw std::invalid_argument("k must be at least 1");
    const double x = 4.0 * static_cast<double>(k) * static_cast<double>(dim) / eps;
    // Guard against log2 landing a hair above an exact power of two.
    const int m = static_cast<int>(std::ceil(std::log2(x) - 1e-12));
    return std::max(1, m);
  }

  Covering(const Histogram& p, std::size_t k, double eps)
      : Covering(MarginalPartitions(p, levels_for(k, p.dim(), eps))) {}

  explicit Covering(MarginalPartitions parts) : parts_(std::move(parts)) {
    const std::size_t d = parts_.dim();
    const int m = parts_.levels();
    if (static_cast<std::size_t>(m - 1) * d + 1 > 47) {
      throw std::invalid_argument("covering too fine to address: d*(m-1) must be <= 46");
    }
    std::uint64_t grids = 1;
    for (std::size_t j = 0; j < d; ++j) grids *= static_cast<std::uint64_t>(m);
    if (grids >= (std::uint64_t{1} << 16)) {
      throw std::invalid_argument("too many z-grids: m^d must be < 65536");
    }
    grid_count_ = static_cast<std::uint32_t>(grids);
    levels_.resize(grid_count_);
    for (std::uint32_t g = 0; g < grid_count_; ++g) {
      std::uint32_t rest = g;
      for (std::size_t j = d; j-- > 0;) {
        levels_[g][j] = static_cast<int>(rest % static_cast<std::uint32_t>(m));
        rest /= static_cast<std::uint32_t>(m);
      }
    }
  }

  static Covering with_levels(const Histogram& p, int m) {
    return Covering(MarginalPartitions(p, m));
  }

  int levels() const { return parts_.levels(); }
  std::size_t dim() const { return parts_.dim(); }
  const MarginalPartitions& partitions() const { return parts_; }

  std::uint32_t grid_count() const { return grid_count_; }
  // Number of covering sets containing each point.
  std::uint64_t ell() const { return grid_count_; }
  // Subfamily size factor: |S| <= k * j.
  std::uint64_t j() const { return (std::uint64_t{1} << dim()) * grid_count_; }

  const GridLevels& grid_levels(std::uint32_t grid) const { return levels_[grid]; }

  std::uint32_t grid_index(const GridLevels& z) const {
    std::uint32_t g = 0;
    for (std::size_t j = 0; j < dim(); ++j) {
      g = g * static_cast<std::uint32_t>(levels()) + static_cast<std::uint32_t>(z[j]);
    }
    return g;
  }

  std::uint64_t cells_in_grid(std::uint32_t grid) const {
    const GridLevels& z = grid_levels(grid);
    int bits = 0;
    for (std::size_t j = 0; j < dim(); ++j) bits += z[j];
    return std::uint64_t{1} << bits;
  }

  std::uint64_t total_cells() const {
    std::uint64_t total = 0;
    for (std::uint32_t g = 0; g < grid_count_; ++g) total += cells_in_grid(g);
    return total;
  }

  CellAddress make_address(std::uint32_t grid, std::span<const std::uint64_t> idx) const {
    const GridLevels& z = grid_levels(grid);
    std::uint64_t cell = 0;
    for (std::size_t j = 0; j < dim(); ++j) cell = (cell << z[j]) | idx[j];
    return {grid, cell};
  }

  std::uint64_t interval_index(const CellAddress& a, std::size_t j) const {
    const GridLevels& z = grid_levels(a.grid);
    int shift = 0;
    for (std::size_t i = j + 1; i < dim(); ++i) shift += z[i];
    return (a.cell >> shift) & ((std::uint64_t{1} << z[j]) - 1);
  }

  // The cell of the given grid containing x.
  CellAddress locate(std::uint32_t grid, const Point& x) const {
    const GridLevels& z = grid_levels(grid);
    const int top = levels() - 1;
    std::uint64_t cell = 0;
    for (std::size_t j = 0; j < dim(); ++j) {
      const std::uint64_t idx = parts_.finest_index(j, x[j]) >> (top - z[j]);
      cell = (cell << z[j]) | idx;
    }
    return {grid, cell};
  }

  // f(address) for the one cell of every grid that contains x.
  template <class F>
  void for_each_cell_containing(const Point& x, F&& f) const {
    std::array<std::uint64_t, kMaxDim> fine{};
    for (std::size_t j = 0; j < dim(); ++j) fine[j] = parts_.finest_index(j, x[j]);
    const int top = levels() - 1;
    for (std::uint32_t g = 0; g < grid_count_; ++g) {
      const GridLevels& z = grid_levels(g);
      std::uint64_t cell = 0;
      for (std::size_t j = 0; j < dim(); ++j) cell = (cell << z[j]) | (fine[j] >> (top - z[j]));
      f(CellAddress{g, cell});
    }
  }

  // Enumerates every cell of the covering. Intended for small coverings.
  template <class F>
  void for_each_cell(F&& f) const {
    for (std::uint32_t g = 0; g < grid_count_; ++g) {
      const std::uint64_t n = cells_in_grid(g);
      for (std::uint64_t c = 0; c < n; ++c) f(CellAddress{g, c});
    }
  }

  Rect cell_rect(const CellAddress& a) const {
    const GridLevels& z = grid_levels(a.grid);
    Rect r{Point(dim()), Point(dim())};
    for (std::size_t j = 0; j < dim(); ++j) {
      const std::uint64_t idx = interval_index(a, j);
      r.lo[j] = parts_.boundary(j, z[j], idx);
      r.hi[j] = parts_.boundary(j, z[j], idx + 1);
    }
    return r;
  }

  nlohmann::json to_json() const {
    nlohmann::json coords = nlohmann::json::array();
    for (std::size_t j = 0; j < dim(); ++j) {
      nlohmann::json per_level = nlohmann::json::array();
      for (int i = 0; i < levels(); ++i) per_level.push_back(parts_.cuts(j, i));
      coords.push_back(per_level);
    }
    return {{"dim", dim()},  {"m", levels()},          {"ell", ell()},
            {"j", j()},      {"grids", grid_count_},   {"total_cells", total_cells()},
            {"breakpoints", coords}};
  }

 private:
  MarginalPartitions parts_;
  std::uint32_t grid_count_ = 1;
  std::vector<GridLevels> levels_;
};

namespace detail {

struct DyadicPiece {
  int level;
  std::uint64_t index;
};

// Splits the run [u, v) of finest-level intervals into canonical dyadic
// blocks, largest first; at most 2(m-1) blocks.
inline std::vector<DyadicPiece> dyadic_decomposition(std::uint64_t u, std::uint64_t v, int top) {
  std::vector<DyadicPiece> out;
  while (u < v) {
    int width_log = 0;
    while (width_log < top && (u % (std::uint64_t{2} << width_log)) == 0 &&
           u + (std::uint64_t{2} << width_log) <= v) {
      ++width_log;
    }
    out.push_back({top - width_log, u >> width_log});
    u += std::uint64_t{1} << width_log;
  }
  return out;
}

}  // namespace detail

// Disjoint covering cells inside the rectangles of a partition that capture
// all but O(eps) of the mass. Each rectangle is shrunk per coordinate to the
// finest-level boundaries it contains (dropping the partial end intervals) and
// the remaining run of intervals is written as canonical dyadic blocks; the
// products of those blocks are cells of the covering.
inline std::vector<CellAddress> extract_subfamily(const Covering& cov,
                                                  std::span<const Rect> partition) {
  validate_partition(cov.dim(), partition);
  constexpr double tol = 1e-12;
  const int top = cov.levels() - 1;
  std::vector<CellAddress> out;
  for (const Rect& r : partition) {
    std::array<std::vector<detail::DyadicPiece>, kMaxDim> blocks;
    bool empty = false;
    for (std::size_t j = 0; j < cov.dim(); ++j) {
      const auto b = cov.partitions().finest(j);
      const auto u = static_cast<std::uint64_t>(
          std::lower_bound(b.begin(), b.end(), r.lo[j] - tol) - b.begin());
      const auto v = static_cast<std::uint64_t>(
          std::upper_bound(b.begin(), b.end(), r.hi[j] + tol) - b.begin()) - 1;
      if (u >= v) {
        empty = true;
        break;
      }
      blocks[j] = detail::dyadic_decomposition(u, v, top);
    }
    if (empty) continue;
    std::array<std::size_t, kMaxDim> pick{};
    while (true) {
      GridLevels z{};
      std::array<std::uint64_t, kMaxDim> idx{};
      for (std::size_t j = 0; j < cov.dim(); ++j) {
        z[j] = blocks[j][pick[j]].level;
        idx[j] = blocks[j][pick[j]].index;
      }
      const std::uint32_t g = cov.grid_index(z);
      out.push_back(cov.make_address(g, std::span<const std::uint64_t>(idx.data(), cov.dim())));
      std::size_t j = cov.dim();
      bool done = true;
      while (j-- > 0) {
        if (++pick[j] < blocks[j].size()) {
          done = false;
          break;
        }
        pick[j] = 0;
      }
      if (done) break;
    }
  }
  return out;
}

struct SubfamilyReport {
  std::size_t size = 0;
  bool disjoint = true;
  bool contained = true;  // every cell inside a single partition rectangle
  double covered_mass = 0.0;
};

// Independent geometric check of a subfamily against its partition.
inline SubfamilyReport verify_subfamily(const Covering& cov, const Histogram& p,
                                        std::span<const Rect> partition,
                                        std::span<const CellAddress> cells) {
  SubfamilyReport report;
  report.size = cells.size();
  std::vector<Rect> rects;
  rects.reserve(cells.size());
  for (const CellAddress& a : cells) rects.push_back(cov.cell_rect(a));

  BoxIndex parts(cov.dim(), partition);
  for (const Rect& r : rects) {
    int hosts = 0;
    bool enclosed = false;
    parts.for_each_overlapping(r, [&](std::size_t i) {
      if (overlap_volume(r, partition[i]) > kOverlapTolerance) ++hosts;
      if (partition[i].encloses(r)) enclosed = true;
    });
    if (hosts != 1 || !enclosed) report.contained = false;
  }

  // Sweep along axis 0.
  std::vector<std::size_t> order(rects.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return rects[a].lo[0] < rects[b].lo[0]; });
  std::vector<std::size_t> active;
  for (std::size_t i : order) {
    const double front = rects[i].lo[0];
    std::erase_if(active, [&](std::size_t a) { return rects[a].hi[0] <= front + 1e-15; });
    for (std::size_t a : active) {
      if (overlap_volume(rects[a], rects[i]) > kOverlapTolerance) {
        report.disjoint = false;
        break;
      }
    }
    if (!report.disjoint) break;
    active.push_back(i);
  }

  report.covered_mass = mass_on(p, rects);
  return report;
}

}  // namespace histest
