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

// Random partitions, histograms and discrete distributions for property
// checks.

#pragma once

#include <cstdint>
#include <vector>

#include "histest/geometry.hpp"
#include "histest/histogram.hpp"
#include "histest/rng.hpp"

namespace histest {

// Guillotine partition of [0,1]^d into exactly k boxes: repeatedly cut a
// random box along a random axis at a random interior point.
inline std::vector<Rect> random_partition(std::size_t dim, std::size_t k, Rng& rng) {
  std::vector<Rect> boxes{Rect::unit(dim)};
  while (boxes.size() < k) {
    const std::size_t i = uniform_index(rng, boxes.size());
    const std::size_t j = uniform_index(rng, dim);
    Rect& b = boxes[i];
    const double t = 0.1 + 0.8 * uniform01(rng);
    const double cut = b.lo[j] + t * b.extent(j);
    if (!(cut > b.lo[j] && cut < b.hi[j])) continue;
    Rect upper = b;
    b.hi[j] = cut;
    upper.lo[j] = cut;
    boxes.push_back(upper);
  }
  return boxes;
}

// k-histogram on a random partition with random positive densities; with
// probability zero_fraction a piece gets density 0 instead.
inline Histogram random_histogram(std::size_t dim, std::size_t k, Rng& rng,
                                  double zero_fraction = 0.0) {
  const std::vector<Rect> boxes = random_partition(dim, k, rng);
  std::vector<double> w(boxes.size());
  double total = 0.0;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    w[i] = (i > 0 && uniform01(rng) < zero_fraction) ? 0.0 : 0.05 + uniform01(rng);
    total += w[i] * boxes[i].volume();
  }
  std::vector<Piece> pieces;
  for (std::size_t i = 0; i < boxes.size(); ++i) pieces.push_back({boxes[i], w[i] / total});
  return Histogram(dim, std::move(pieces));
}

// Product-form histogram: density f_1(x_1) ... f_d(x_d) with each f_j a
// random 1-d histogram on `cuts` intervals.
inline Histogram random_product_histogram(std::size_t dim, std::size_t cuts, Rng& rng) {
  std::vector<std::vector<double>> edges(dim), dens(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    edges[j] = {0.0, 1.0};
    for (std::size_t c = 1; c < cuts; ++c) edges[j].push_back(0.05 + 0.9 * uniform01(rng));
    std::sort(edges[j].begin(), edges[j].end());
    double total = 0.0;
    for (std::size_t c = 0; c + 1 < edges[j].size(); ++c) {
      dens[j].push_back(0.1 + uniform01(rng));
      total += dens[j].back() * (edges[j][c + 1] - edges[j][c]);
    }
    for (double& v : dens[j]) v /= total;
  }
  std::vector<Piece> pieces;
  std::vector<std::size_t> idx(dim, 0);
  while (true) {
    Rect r{Point(dim), Point(dim)};
    double f = 1.0;
    for (std::size_t j = 0; j < dim; ++j) {
      r.lo[j] = edges[j][idx[j]];
      r.hi[j] = edges[j][idx[j] + 1];
      f *= dens[j][idx[j]];
    }
    if (r.volume() > 0.0) pieces.push_back({r, f});
    std::size_t j = dim;
    while (j-- > 0) {
      if (++idx[j] + 1 < edges[j].size()) break;
      idx[j] = 0;
    }
    if (j == static_cast<std::size_t>(-1)) break;
  }
  return Histogram(dim, std::move(pieces));
}

// Dirichlet(1,...,1) draw on n elements.
inline DiscreteDist random_discrete(std::size_t n, Rng& rng) {
  std::vector<double> w(n);
  std::exponential_distribution<double> e(1.0);
  for (double& v : w) v = e(rng);
  return DiscreteDist::normalized(std::move(w));
}

}  // namespace histest
