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

// Piecewise-constant densities over axis-aligned partitions of [0,1]^d, with
// exact (refinement-based) integration and distance oracles.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "histest/geometry.hpp"
#include "histest/rng.hpp"

namespace histest {

inline constexpr double kMassTolerance = 1e-9;
inline constexpr double kDiscreteTolerance = 1e-12;
// Overlaps thinner than this are rounding noise from computed boundaries.
inline constexpr double kOverlapTolerance = 1e-12;

enum class Violation {
  kDimension,
  kEmpty,
  kBadBounds,
  kNegativeDensity,
  kOverlap,
  kVolumeGap,
  kMass,
  kGridAlignment,
};

inline const char* to_string(Violation v) {
  switch (v) {
    case Violation::kDimension: return "dimension";
    case Violation::kEmpty: return "empty";
    case Violation::kBadBounds: return "bad_bounds";
    case Violation::kNegativeDensity: return "negative_density";
    case Violation::kOverlap: return "overlap";
    case Violation::kVolumeGap: return "volume_gap";
    case Violation::kMass: return "mass";
    case Violation::kGridAlignment: return "grid_alignment";
  }
  return "unknown";
}

class ValidationError : public std::invalid_argument {
 public:
  ValidationError(Violation kind, const std::string& what)
      : std::invalid_argument(std::string(to_string(kind)) + ": " + what),
        kind_(kind) {}
  Violation kind() const { return kind_; }

 private:
  Violation kind_;
};

struct Domain {
  enum class Kind { kUnitCube, kGrid };
  Kind kind = Kind::kUnitCube;
  std::size_t grid_side = 0;  // m for [m]^d

  static Domain unit_cube() { return {}; }
  static Domain grid(std::size_t m) { return {Kind::kGrid, m}; }
  bool is_grid() const { return kind == Kind::kGrid; }
  friend bool operator==(const Domain&, const Domain&) = default;
};

struct Piece {
  Rect rect;
  double density = 0.0;  // probability per unit volume

  double mass() const { return density * rect.volume(); }
};

// Bucket grid over [0,1]^d listing the boxes that meet each bucket. Used for
// point location and box queries against a partition.
class BoxIndex {
 public:
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  BoxIndex() = default;

  BoxIndex(std::size_t dim, std::span<const Rect> boxes)
      : dim_(dim), boxes_(boxes.begin(), boxes.end()) {
    const double per_axis =
        std::floor(std::pow(static_cast<double>(boxes_.size()), 1.0 / dim) + 1e-9);
    side_ = static_cast<std::size_t>(std::clamp(per_axis, 1.0, 1024.0));
    std::size_t total = 1;
    for (std::size_t j = 0; j < dim_; ++j) total *= side_;
    buckets_.assign(total, {});
    for (std::size_t i = 0; i < boxes_.size(); ++i) {
      for_each_bucket(boxes_[i], [&](std::size_t b) { buckets_[b].push_back(i); });
    }
  }

  std::size_t size() const { return boxes_.size(); }

  // Index of the box containing x, or npos.
  std::size_t locate(const Point& x) const {
    std::size_t b = 0;
    for (std::size_t j = 0; j < dim_; ++j) b = b * side_ + bucket_coord(x[j]);
    for (std::size_t i : buckets_[b]) {
      if (boxes_[i].contains(x)) return i;
    }
    return npos;
  }

  // Calls f(i) once for every box i with positive-volume overlap with r.
  template <class F>
  void for_each_overlapping(const Rect& r, F&& f) const {
    std::vector<std::size_t> candidates;
    std::size_t touched = 0;
    for_each_bucket(r, [&](std::size_t b) {
      ++touched;
      candidates.insert(candidates.end(), buckets_[b].begin(), buckets_[b].end());
    });
    if (touched > 1) {
      std::sort(candidates.begin(), candidates.end());
      candidates.erase(std::unique(candidates.begin(), candidates.end()),
                       candidates.end());
    }
    for (std::size_t i : candidates) {
      if (overlap_volume(boxes_[i], r) > 0.0) f(i);
    }
  }

 private:
  std::size_t bucket_coord(double v) const {
    const auto c = static_cast<std::ptrdiff_t>(std::floor(v * side_));
    return static_cast<std::size_t>(
        std::clamp<std::ptrdiff_t>(c, 0, static_cast<std::ptrdiff_t>(side_) - 1));
  }

  template <class F>
  void for_each_bucket(const Rect& r, F&& f) const {
    std::array<std::size_t, kMaxDim> lo{}, hi{}, cur{};
    for (std::size_t j = 0; j < dim_; ++j) {
      lo[j] = bucket_coord(r.lo[j]);
      const auto top = static_cast<std::ptrdiff_t>(std::ceil(r.hi[j] * side_)) - 1;
      hi[j] = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(
          top, static_cast<std::ptrdiff_t>(lo[j]), static_cast<std::ptrdiff_t>(side_) - 1));
      cur[j] = lo[j];
    }
    while (true) {
      std::size_t b = 0;
      for (std::size_t j = 0; j < dim_; ++j) b = b * side_ + cur[j];
      f(b);
      std::size_t j = dim_;
      while (j > 0) {
        --j;
        if (cur[j] < hi[j]) {
          ++cur[j];
          break;
        }
        cur[j] = lo[j];
        if (j == 0) return;
      }
    }
  }

  std::size_t dim_ = 0;
  std::size_t side_ = 1;
  std::vector<Rect> boxes_;
  std::vector<std::vector<std::size_t>> buckets_;
};

namespace detail {

inline std::optional<ValidationError> check_boxes(std::size_t dim,
                                                  std::span<const Rect> boxes) {
  if (dim == 0 || dim > kMaxDim) {
    return ValidationError(Violation::kDimension,
                           "dimension " + std::to_string(dim) + " unsupported");
  }
  if (boxes.empty()) return ValidationError(Violation::kEmpty, "no pieces");
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const Rect& r = boxes[i];
    if (r.lo.dim() != dim || r.hi.dim() != dim) {
      return ValidationError(Violation::kDimension,
                             "piece " + std::to_string(i) + " has wrong dimension");
    }
    for (std::size_t j = 0; j < dim; ++j) {
      if (!(0.0 <= r.lo[j] && r.lo[j] < r.hi[j] && r.hi[j] <= 1.0)) {
        return ValidationError(Violation::kBadBounds,
                               "piece " + std::to_string(i) + " coordinate " +
                                   std::to_string(j) + " is not 0 <= lo < hi <= 1");
      }
    }
  }
  return std::nullopt;
}

// Disjointness and exact tiling of the unit cube (up to measure zero).
inline std::optional<ValidationError> check_tiling(std::size_t dim,
                                                   std::span<const Rect> boxes,
                                                   const BoxIndex& index) {
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    std::optional<std::size_t> clash;
    index.for_each_overlapping(boxes[i], [&](std::size_t o) {
      if (o > i && !clash && overlap_volume(boxes[i], boxes[o]) > kOverlapTolerance) {
        clash = o;
      }
    });
    if (clash) {
      return ValidationError(Violation::kOverlap, "pieces " + std::to_string(i) +
                                                      " and " + std::to_string(*clash) +
                                                      " overlap");
    }
  }
  double volume = 0.0;
  for (const Rect& r : boxes) volume += r.volume();
  if (std::abs(volume - 1.0) > kMassTolerance) {
    return ValidationError(Violation::kVolumeGap,
                           "piece volumes sum to " + std::to_string(volume));
  }
  (void)dim;
  return std::nullopt;
}

inline bool on_grid(double v, std::size_t m) {
  const double s = v * static_cast<double>(m);
  return std::abs(s - std::round(s)) <= kMassTolerance;
}

}  // namespace detail

// First violated invariant of a candidate histogram, if any.
inline std::optional<ValidationError> find_violation(std::size_t dim,
                                                     std::span<const Piece> pieces,
                                                     const Domain& domain,
                                                     const BoxIndex* index = nullptr) {
  std::vector<Rect> boxes;
  boxes.reserve(pieces.size());
  for (const Piece& p : pieces) boxes.push_back(p.rect);
  if (auto e = detail::check_boxes(dim, boxes)) return e;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    if (!std::isfinite(pieces[i].density) || pieces[i].density < 0.0) {
      return ValidationError(Violation::kNegativeDensity,
                             "piece " + std::to_string(i) + " has density " +
                                 std::to_string(pieces[i].density));
    }
  }
  std::optional<BoxIndex> local;
  if (index == nullptr) index = &local.emplace(dim, boxes);
  if (auto e = detail::check_tiling(dim, boxes, *index)) return e;
  double mass = 0.0;
  for (const Piece& p : pieces) mass += p.mass();
  if (std::abs(mass - 1.0) > kMassTolerance) {
    return ValidationError(Violation::kMass, "total mass is " + std::to_string(mass));
  }
  if (domain.is_grid()) {
    if (domain.grid_side == 0) {
      return ValidationError(Violation::kGridAlignment, "grid side must be positive");
    }
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      for (std::size_t j = 0; j < dim; ++j) {
        if (!detail::on_grid(pieces[i].rect.lo[j], domain.grid_side) ||
            !detail::on_grid(pieces[i].rect.hi[j], domain.grid_side)) {
          return ValidationError(Violation::kGridAlignment,
                                 "piece " + std::to_string(i) +
                                     " is not aligned to the 1/m grid");
        }
      }
    }
  }
  return std::nullopt;
}

inline void validate(std::size_t dim, std::span<const Piece> pieces,
                     const Domain& domain = Domain::unit_cube()) {
  if (auto e = find_violation(dim, pieces, domain)) throw *e;
}

// Checks that `boxes` partition the unit cube.
inline void validate_partition(std::size_t dim, std::span<const Rect> boxes) {
  if (auto e = detail::check_boxes(dim, boxes)) throw *e;
  BoxIndex index(dim, boxes);
  if (auto e = detail::check_tiling(dim, boxes, index)) throw *e;
}

// A k-histogram: immutable after construction, which validates it.
class Histogram {
 public:
  Histogram(std::size_t dim, std::vector<Piece> pieces,
            Domain domain = Domain::unit_cube())
      : dim_(dim), domain_(domain), pieces_(std::move(pieces)) {
    std::vector<Rect> boxes;
    boxes.reserve(pieces_.size());
    for (const Piece& p : pieces_) boxes.push_back(p.rect);
    if (auto e = detail::check_boxes(dim_, boxes)) throw *e;
    index_ = BoxIndex(dim_, boxes);
    if (auto e = find_violation(dim_, pieces_, domain_, &index_)) throw *e;
  }

  static Histogram uniform(std::size_t dim) {
    return Histogram(dim, {Piece{Rect::unit(dim), 1.0}});
  }

  std::size_t dim() const { return dim_; }
  const Domain& domain() const { return domain_; }
  std::span<const Piece> pieces() const { return pieces_; }
  std::size_t size() const { return pieces_.size(); }
  const BoxIndex& index() const { return index_; }

  // Index of the piece owning x.
  std::size_t piece_at(const Point& x) const { return index_.locate(x); }

  double density_at(const Point& x) const {
    const std::size_t i = piece_at(x);
    return i == BoxIndex::npos ? 0.0 : pieces_[i].density;
  }

 private:
  std::size_t dim_;
  Domain domain_;
  std::vector<Piece> pieces_;
  BoxIndex index_;
};

inline void validate(const Histogram& h) {
  validate(h.dim(), h.pieces(), h.domain());
}

inline Point uniform_point_in(const Rect& r, Rng& rng) {
  Point x(r.dim());
  for (std::size_t j = 0; j < r.dim(); ++j) {
    double v = r.lo[j] + uniform01(rng) * r.extent(j);
    if (v >= r.hi[j]) v = std::nextafter(r.hi[j], r.lo[j]);
    x[j] = v;
  }
  return x;
}

// Draws points from a histogram: a piece with probability equal to its mass,
// then a uniform point inside it.
class HistogramSampler {
 public:
  explicit HistogramSampler(const Histogram& h) : h_(&h) {
    cumulative_.reserve(h.size());
    double acc = 0.0;
    for (const Piece& p : h.pieces()) {
      acc += p.mass();
      cumulative_.push_back(acc);
    }
  }

  Point operator()(Rng& rng) const {
    const double u = uniform01(rng) * cumulative_.back();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end()) --it;
    // Skip trailing zero-mass pieces that share the final cumulative value.
    auto i = static_cast<std::size_t>(it - cumulative_.begin());
    while (h_->pieces()[i].density <= 0.0 && i > 0) --i;
    return uniform_point_in(h_->pieces()[i].rect, rng);
  }

  const Histogram& histogram() const { return *h_; }

 private:
  const Histogram* h_;
  std::vector<double> cumulative_;
};

inline Point sample(const Histogram& h, Rng& rng) { return HistogramSampler(h)(rng); }

// Exact mass of a finite union of pairwise-disjoint boxes.
inline double mass_on(const Histogram& h, std::span<const Rect> region) {
  double mass = 0.0;
  for (const Rect& r : region) {
    h.index().for_each_overlapping(r, [&](std::size_t i) {
      mass += h.pieces()[i].density * overlap_volume(h.pieces()[i].rect, r);
    });
  }
  return mass;
}

inline double mass_on(const Histogram& h, const Rect& r) {
  return mass_on(h, std::span<const Rect>(&r, 1));
}

// Visits every cell of the common refinement of p and q as f(cell, dp, dq).
template <class F>
void for_each_common_cell(const Histogram& p, const Histogram& q, F&& f) {
  if (p.dim() != q.dim()) {
    throw std::invalid_argument("histograms have different dimensions");
  }
  for (const Piece& a : p.pieces()) {
    q.index().for_each_overlapping(a.rect, [&](std::size_t i) {
      const Piece& b = q.pieces()[i];
      if (auto cell = intersect(a.rect, b.rect)) f(*cell, a.density, b.density);
    });
  }
}

inline double l1_distance(const Histogram& p, const Histogram& q) {
  double d = 0.0;
  for_each_common_cell(p, q, [&](const Rect& cell, double dp, double dq) {
    d += std::abs(dp - dq) * cell.volume();
  });
  return d;
}

inline double tv_distance(const Histogram& p, const Histogram& q) {
  return 0.5 * l1_distance(p, q);
}

// Finite-support probability vector.
class DiscreteDist {
 public:
  explicit DiscreteDist(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.empty()) throw ValidationError(Violation::kEmpty, "empty support");
    double total = 0.0;
    for (std::size_t i = 0; i < probs_.size(); ++i) {
      if (!std::isfinite(probs_[i]) || probs_[i] < 0.0) {
        throw ValidationError(Violation::kNegativeDensity,
                              "probability " + std::to_string(i) + " is negative");
      }
      total += probs_[i];
    }
    if (std::abs(total - 1.0) > kDiscreteTolerance) {
      throw ValidationError(Violation::kMass, "probabilities sum to " +
                                                  std::to_string(total));
    }
  }

  // Rescales nonnegative weights to sum to one.
  static DiscreteDist normalized(std::vector<double> weights) {
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(total > 0.0)) throw ValidationError(Violation::kMass, "zero total weight");
    for (double& w : weights) w /= total;
    return DiscreteDist(std::move(weights));
  }

  static DiscreteDist uniform(std::size_t n) {
    return DiscreteDist(std::vector<double>(n, 1.0 / static_cast<double>(n)));
  }

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::span<const double> probs() const { return probs_; }

 private:
  std::vector<double> probs_;
};

class DiscreteSampler {
 public:
  explicit DiscreteSampler(const DiscreteDist& p) {
    cumulative_.reserve(p.size());
    double acc = 0.0;
    for (double v : p.probs()) cumulative_.push_back(acc += v);
  }

  std::size_t operator()(Rng& rng) const {
    const double u = uniform01(rng) * cumulative_.back();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end()) --it;
    auto i = static_cast<std::size_t>(it - cumulative_.begin());
    while (i > 0 && cumulative_[i] == cumulative_[i - 1]) --i;
    return i;
  }

 private:
  std::vector<double> cumulative_;
};

inline double l1_distance(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("support sizes differ");
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) d += std::abs(p[i] - q[i]);
  return d;
}

inline double l1_distance(const DiscreteDist& p, const DiscreteDist& q) {
  return l1_distance(p.probs(), q.probs());
}

inline double l2_distance(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("support sizes differ");
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) d += (p[i] - q[i]) * (p[i] - q[i]);
  return std::sqrt(d);
}

// Sum of the k largest coordinate-wise absolute differences.
inline double l1k_distance(std::span<const double> p, std::span<const double> q,
                           std::size_t k) {
  if (p.size() != q.size()) throw std::invalid_argument("support sizes differ");
  if (k < 1 || k > p.size()) {
    throw std::invalid_argument("l1k distance needs 1 <= k <= support size");
  }
  std::vector<double> diff(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) diff[i] = std::abs(p[i] - q[i]);
  std::nth_element(diff.begin(), diff.begin() + static_cast<std::ptrdiff_t>(k - 1),
                   diff.end(), std::greater<>());
  return std::accumulate(diff.begin(), diff.begin() + static_cast<std::ptrdiff_t>(k), 0.0);
}

inline double l1k_distance(const DiscreteDist& p, const DiscreteDist& q, std::size_t k) {
  return l1k_distance(p.probs(), q.probs(), k);
}

// Row-major flat index of a cell of [m]^d.
inline std::size_t grid_flat_index(std::span<const std::size_t> cell, std::size_t m) {
  std::size_t flat = 0;
  for (std::size_t c : cell) flat = flat * m + c;
  return flat;
}

// Embeds a mass table on [m]^d (row-major) into [0,1]^d: each cell becomes a
// box of side 1/m carrying its mass.
inline Histogram discretize(std::span<const double> table, std::size_t dim, std::size_t m) {
  if (dim == 0 || dim > kMaxDim) throw std::invalid_argument("unsupported dimension");
  if (m == 0) throw std::invalid_argument("grid side must be positive");
  std::size_t cells = 1;
  for (std::size_t j = 0; j < dim; ++j) cells *= m;
  if (table.size() != cells) {
    throw std::invalid_argument("mass table has " + std::to_string(table.size()) +
                                " entries, expected " + std::to_string(cells));
  }
  const double side = 1.0 / static_cast<double>(m);
  const double cell_volume = std::pow(side, static_cast<double>(dim));
  std::vector<Piece> pieces;
  pieces.reserve(cells);
  std::array<std::size_t, kMaxDim> idx{};
  for (std::size_t flat = 0; flat < cells; ++flat) {
    std::size_t rest = flat;
    for (std::size_t j = dim; j-- > 0;) {
      idx[j] = rest % m;
      rest /= m;
    }
    Rect r{Point(dim), Point(dim)};
    for (std::size_t j = 0; j < dim; ++j) {
      r.lo[j] = static_cast<double>(idx[j]) / static_cast<double>(m);
      r.hi[j] = static_cast<double>(idx[j] + 1) / static_cast<double>(m);
    }
    pieces.push_back({r, table[flat] / cell_volume});
  }
  return Histogram(dim, std::move(pieces), Domain::grid(m));
}

// Uniform point inside grid cell `cell` of [m]^d after embedding.
inline Point embed_grid_point(std::span<const std::size_t> cell, std::size_t m, Rng& rng) {
  Rect r{Point(cell.size()), Point(cell.size())};
  for (std::size_t j = 0; j < cell.size(); ++j) {
    r.lo[j] = static_cast<double>(cell[j]) / static_cast<double>(m);
    r.hi[j] = static_cast<double>(cell[j] + 1) / static_cast<double>(m);
  }
  return uniform_point_in(r, rng);
}

// (1 - eta) h + eta * uniform; same partition, so still a k-histogram.
inline Histogram mix_with_uniform(const Histogram& h, double eta) {
  if (eta < 0.0 || eta > 1.0) throw std::invalid_argument("mixing weight outside [0,1]");
  std::vector<Piece> pieces(h.pieces().begin(), h.pieces().end());
  for (Piece& p : pieces) p.density = (1.0 - eta) * p.density + eta;
  return Histogram(h.dim(), std::move(pieces), h.domain());
}

// (1 - w) a + w b over the common refinement of both partitions.
inline Histogram mixture(const Histogram& a, const Histogram& b, double w) {
  if (w < 0.0 || w > 1.0) throw std::invalid_argument("mixing weight outside [0,1]");
  std::vector<Piece> pieces;
  for_each_common_cell(a, b, [&](const Rect& cell, double da, double db) {
    pieces.push_back({cell, (1.0 - w) * da + w * db});
  });
  return Histogram(a.dim(), std::move(pieces), a.domain());
}

}  // namespace histest
