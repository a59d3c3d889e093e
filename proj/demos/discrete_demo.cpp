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

// Identity testing on the discrete grid [8]: q moves 0.2 of the mass onto one
// cell, an L1 distance of 0.4 from uniform p.

#include <cstdio>
#include <vector>

#include "histest/histest.hpp"

int main() {
  using namespace histest;
  const std::size_t m = 8;
  std::vector<double> p(m, 1.0 / m);
  std::vector<double> q = p;
  q[0] += 0.2;
  q[5] -= 0.1;
  q[6] -= 0.1;
  const DiscreteDist pd(p), qd(q);
  const DiscreteSampler ps(pd), qs(qd);

  const IdentityParams prm{8, 0.3, 1.0 / 3.0, 1e-4};
  Rng rng = make_stream(7);
  auto same = test_identity_discrete(p, 1, m, [&](Rng& g) {
    return std::vector<std::size_t>{ps(g)};
  }, prm, rng);
  auto moved = test_identity_discrete(p, 1, m, [&](Rng& g) {
    return std::vector<std::size_t>{qs(g)};
  }, prm, rng);
  std::printf("q = p      : %s\n", same.decision());
  std::printf("q shifted  : %s (l1 = %.2f)\n", moved.decision(), l1_distance(std::span<const double>(p), qd.probs()));
  return 0;
}
