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

// Tests a few unknown distributions on [0,1]^2 for uniformity: the uniform
// distribution itself and two hard instances at L1 distance 0.5.

#include <cstdio>

#include "histest/histest.hpp"

int main() {
  using namespace histest;
  const std::size_t d = 2, k = 32;
  const double eps = 0.5;
  // A small constant suffices here; see `histest calibrate`.
  const IdentityParams prm{k, eps, 1.0 / 3.0, 2e-5};

  Rng rng = make_stream(42);
  const Histogram u = Histogram::uniform(d);
  const Histogram board = sample_checkerboard(3, d, eps, rng);
  const Histogram regions = sample_regionQ(1, 3, d, eps, rng);

  struct Case {
    const char* name;
    const Histogram* q;
  } cases[] = {{"uniform", &u}, {"checkerboard", &board}, {"regionQ", &regions}};
  for (const auto& c : cases) {
    const HistogramSampler qs(*c.q);
    const IdentityVerdict v = test_uniformity([&](Rng& g) { return qs(g); }, d, prm, rng);
    std::printf("%-12s |q-U|_1=%.3f  %s  (%llu samples, %u/%u repetitions rejected)\n", c.name,
                l1_distance(*c.q, u), v.decision(),
                static_cast<unsigned long long>(v.samples_used), v.rejecting_repetitions,
                v.repetitions);
  }
  return 0;
}
