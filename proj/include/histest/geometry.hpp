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

#pragma once

#include <algorithm>
#include <array>
#include <cassert>
#include <compare>
#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>

namespace histest {

// Points and boxes live in a fixed-capacity buffer so that the hot sampling
// loops never touch the heap.
inline constexpr std::size_t kMaxDim = 8;

class Point {
 public:
  Point() = default;

  explicit Point(std::size_t dim, double fill = 0.0) : dim_(dim) {
    if (dim == 0 || dim > kMaxDim) {
      throw std::invalid_argument("dimension must be in [1, " +
                                  std::to_string(kMaxDim) + "]");
    }
    coords_.fill(0.0);
    std::fill_n(coords_.begin(), dim, fill);
  }

  Point(std::initializer_list<double> values) : Point(values.size()) {
    std::copy(values.begin(), values.end(), coords_.begin());
  }

  explicit Point(std::span<const double> values) : Point(values.size()) {
    std::copy(values.begin(), values.end(), coords_.begin());
  }

  std::size_t dim() const { return dim_; }

  double& operator[](std::size_t j) {
    assert(j < dim_);
    return coords_[j];
  }
  double operator[](std::size_t j) const {
    assert(j < dim_);
    return coords_[j];
  }

  std::span<const double> coords() const { return {coords_.data(), dim_}; }

  // Lexicographic; used for deterministic tie-breaking.
  friend std::partial_ordering operator<=>(const Point& a, const Point& b) {
    if (a.dim_ != b.dim_) return a.dim_ <=> b.dim_;
    for (std::size_t j = 0; j < a.dim_; ++j) {
      if (auto c = a.coords_[j] <=> b.coords_[j]; c != 0) return c;
    }
    return std::partial_ordering::equivalent;
  }
  friend bool operator==(const Point& a, const Point& b) {
    return (a <=> b) == 0;
  }

 private:
  std::array<double, kMaxDim> coords_{};
  std::size_t dim_ = 0;
};

// Half-open axis-aligned box prod_j [lo_j, hi_j).
struct Rect {
  Point lo;
  Point hi;

  static Rect unit(std::size_t dim) { return {Point(dim, 0.0), Point(dim, 1.0)}; }

  std::size_t dim() const { return lo.dim(); }
  double extent(std::size_t j) const { return hi[j] - lo[j]; }

  double volume() const {
    double v = 1.0;
    for (std::size_t j = 0; j < dim(); ++j) v *= std::max(0.0, extent(j));
    return v;
  }

  // A coordinate equal to 1 is owned by the box whose upper face is 1, so the
  // closed unit cube is covered exactly once by any partition.
  bool contains(const Point& x) const {
    for (std::size_t j = 0; j < dim(); ++j) {
      if (x[j] < lo[j]) return false;
      if (x[j] >= hi[j] && !(x[j] == 1.0 && hi[j] == 1.0)) return false;
    }
    return true;
  }

  // Weak containment of another box, with slack for accumulated rounding.
  bool encloses(const Rect& other, double tol = 1e-12) const {
    for (std::size_t j = 0; j < dim(); ++j) {
      if (other.lo[j] < lo[j] - tol || other.hi[j] > hi[j] + tol) return false;
    }
    return true;
  }

  friend bool operator==(const Rect& a, const Rect& b) {
    return a.lo == b.lo && a.hi == b.hi;
  }
};

// Intersection with positive volume, if any.
inline std::optional<Rect> intersect(const Rect& a, const Rect& b) {
  assert(a.dim() == b.dim());
  Rect r{Point(a.dim()), Point(a.dim())};
  for (std::size_t j = 0; j < a.dim(); ++j) {
    r.lo[j] = std::max(a.lo[j], b.lo[j]);
    r.hi[j] = std::min(a.hi[j], b.hi[j]);
    if (!(r.lo[j] < r.hi[j])) return std::nullopt;
  }
  return r;
}

inline double overlap_volume(const Rect& a, const Rect& b) {
  double v = 1.0;
  for (std::size_t j = 0; j < a.dim(); ++j) {
    const double w = std::min(a.hi[j], b.hi[j]) - std::max(a.lo[j], b.lo[j]);
    if (w <= 0.0) return 0.0;
    v *= w;
  }
  return v;
}

}  // namespace histest
