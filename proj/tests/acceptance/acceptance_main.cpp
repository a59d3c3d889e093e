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

// Acceptance run: one PASS/FAIL line per criterion, each with its runtime
// and the measurements behind the verdict. Exits non-zero if any fails.
// HISTEST_SEED overrides the master seed.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "histest/histest.hpp"
#include "histest/random_instances.hpp"

namespace histest {
namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;
  std::function<Outcome(std::uint64_t seed)> run;
};

std::string format(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Point random_point(std::size_t d, Rng& rng) {
  Point x(d);
  for (std::size_t j = 0; j < d; ++j) x[j] = uniform01(rng);
  return x;
}

// ------------------------------------------------------------ 1. covering

Outcome covering_contract(std::uint64_t seed) {
  Rng rng = make_stream(seed, {1});
  const double eps = 0.25;
  int ok = 0;
  double worst_mass = 1.0;
  std::size_t worst_ratio_num = 0, worst_ratio_den = 1;
  for (int t = 0; t < 50; ++t) {
    const std::size_t d = 1 + t % 3;
    const std::size_t k = 1 + uniform_index(rng, 32);
    const Histogram p = random_histogram(d, k, rng, 0.1);
    const std::vector<Rect> partition = random_partition(d, k, rng);
    const Covering cov(p, k, eps);
    const auto cells = extract_subfamily(cov, partition);
    const SubfamilyReport rep = verify_subfamily(cov, p, partition, cells);
    const bool size_ok = rep.size <= k * cov.j();
    const bool mass_ok = rep.covered_mass >= 1.0 - eps - 1e-9;
    worst_mass = std::min(worst_mass, rep.covered_mass);
    if (rep.size * worst_ratio_den > worst_ratio_num * k * cov.j()) {
      worst_ratio_num = rep.size;
      worst_ratio_den = k * cov.j();
    }
    ok += size_ok && mass_ok && rep.disjoint && rep.contained;
  }
  return {ok == 50, format("%d/50 instances satisfy all four properties; min covered mass %.6f; "
                           "max |S|/(k j) %zu/%zu",
                           ok, worst_mass, worst_ratio_num, worst_ratio_den)};
}

// ------------------------------------------------------------ 2. coverage

// Counts containing cells without the covering's own lookup: per coordinate
// and level, a linear scan of the level's intervals.
Outcome point_coverage(std::uint64_t seed) {
  Rng rng = make_stream(seed, {2});
  int ok = 0, located = 0;
  const int n = 10000;
  std::vector<Histogram> ps;
  std::vector<Covering> covs;
  for (std::size_t d = 1; d <= 3; ++d) {
    ps.push_back(random_histogram(d, 12, rng, 0.1));
  }
  for (const Histogram& p : ps) covs.emplace_back(p, 12, 0.25);
  for (int t = 0; t < n; ++t) {
    const std::size_t which = static_cast<std::size_t>(t % 3);
    const Covering& cov = covs[which];
    const std::size_t d = cov.dim();
    const Point x = random_point(d, rng);
    const int m = cov.levels();
    std::vector<std::vector<std::uint64_t>> hits(d, std::vector<std::uint64_t>(m, 0));
    for (std::size_t j = 0; j < d; ++j) {
      for (int level = 0; level < m; ++level) {
        const std::uint64_t intervals = std::uint64_t{1} << level;
        for (std::uint64_t b = 0; b < intervals; ++b) {
          const double lo = cov.partitions().boundary(j, level, b);
          const double hi = cov.partitions().boundary(j, level, b + 1);
          hits[j][level] += (lo <= x[j] && x[j] < hi) || (b + 1 == intervals && x[j] == 1.0);
        }
      }
    }
    std::uint64_t containing = 0;
    for (std::uint32_t g = 0; g < cov.grid_count(); ++g) {
      const GridLevels& z = cov.grid_levels(g);
      std::uint64_t c = 1;
      for (std::size_t j = 0; j < d; ++j) c *= hits[j][z[j]];
      containing += c;
    }
    ok += containing == cov.ell();
    bool all_inside = true;
    cov.for_each_cell_containing(x, [&](const CellAddress& a) {
      all_inside = all_inside && cov.cell_rect(a).contains(x);
    });
    located += all_inside;
  }
  return {ok == n && located == n,
          format("%d/%d points in exactly ell cells (ell = %llu, %llu, %llu for d = 1, 2, 3); "
                 "%d/%d located cells contain their point",
                 ok, n, static_cast<unsigned long long>(covs[0].ell()),
                 static_cast<unsigned long long>(covs[1].ell()),
                 static_cast<unsigned long long>(covs[2].ell()), located, n)};
}

// ------------------------------------------------------------ 3. split lemma

// A histogram equal to `level` on `cell` and constant on each box of the
// complement (carved axis by axis), with the remaining mass spread evenly.
std::optional<Histogram> constant_on(const Rect& cell, double level, Rng& rng) {
  const std::size_t d = cell.dim();
  const double inside_mass = level * cell.volume();
  if (inside_mass >= 1.0 || cell.volume() >= 1.0) return std::nullopt;
  std::vector<Rect> outside;
  Rect rest = Rect::unit(d);
  for (std::size_t j = 0; j < d; ++j) {
    if (cell.lo[j] > rest.lo[j]) {
      Rect below = rest;
      below.hi[j] = cell.lo[j];
      outside.push_back(below);
    }
    if (cell.hi[j] < rest.hi[j]) {
      Rect above = rest;
      above.lo[j] = cell.hi[j];
      outside.push_back(above);
    }
    rest.lo[j] = cell.lo[j];
    rest.hi[j] = cell.hi[j];
  }
  std::vector<double> w(outside.size());
  double total = 0.0;
  for (std::size_t i = 0; i < outside.size(); ++i) {
    w[i] = 0.2 + uniform01(rng);
    total += w[i] * outside[i].volume();
  }
  std::vector<Piece> pieces{{cell, level}};
  for (std::size_t i = 0; i < outside.size(); ++i) {
    pieces.push_back({outside[i], w[i] * (1.0 - inside_mass) / total});
  }
  return Histogram(d, std::move(pieces));
}

Outcome split_lemma(std::uint64_t seed) {
  Rng rng = make_stream(seed, {3});
  int done = 0, ok = 0;
  double min_ratio = 1e300;
  while (done < 500) {
    const std::size_t d = 1 + uniform_index(rng, 3);
    const Histogram p = random_histogram(d, 2 + uniform_index(rng, 30), rng, 0.25);
    Rect cell{Point(d), Point(d)};
    if (done % 2 == 0) {
      // A cell of p's own covering.
      const Covering cov = Covering::with_levels(p, 4);
      const auto g = static_cast<std::uint32_t>(uniform_index(rng, cov.grid_count()));
      cell = cov.cell_rect({g, uniform_index(rng, cov.cells_in_grid(g))});
    } else {
      for (std::size_t j = 0; j < d; ++j) {
        const double a = uniform01(rng), b = uniform01(rng);
        cell.lo[j] = std::min(a, b);
        cell.hi[j] = std::max(a, b);
      }
    }
    if (!(cell.volume() > 1e-9)) continue;
    const double mean = mass_on(p, cell) / cell.volume();
    const double level = mean * (0.3 + 1.4 * uniform01(rng));
    const auto q = constant_on(cell, level, rng);
    if (!q) continue;
    const SplitDiscrepancy s = split_discrepancy(p, *q, split_cell(p, cell));
    ++done;
    ok += std::max(s.heavy, s.light) >= s.total / 4.0 - 1e-9;
    if (s.total > 1e-12) min_ratio = std::min(min_ratio, std::max(s.heavy, s.light) / s.total);
  }
  return {ok == 500, format("%d/500 instances satisfy max(a,b) >= total/4; min max(a,b)/total = %.4f",
                            ok, min_ratio)};
}

// ------------------------------------------------------------ 4. Fact 2.5

Outcome fact_2_5(std::uint64_t seed) {
  Rng rng = make_stream(seed, {4});
  int ok = 0;
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 1 + uniform_index(rng, 500);
    const DiscreteDist p = random_discrete(n, rng), q = random_discrete(n, rng);
    Multiset s;
    if (t % 2 == 0) {
      s = flattening_multiset(p, 1.0 + static_cast<double>(uniform_index(rng, 1000)));
    } else {
      s.assign(n, 0);
      for (auto& v : s) v = uniform_index(rng, 5);
    }
    const double gap = std::abs(l1_distance(split(p, s).probs(), split(q, s).probs()) - l1_distance(p, q));
    worst = std::max(worst, gap);
    ok += gap <= 1e-12;
  }
  return {ok == 100, format("%d/100 instances within 1e-12; max gap %.3g", ok, worst)};
}

// ------------------------------------------------------------ 5. l1^k tester

Outcome l1k_operating_point(std::uint64_t seed) {
  const L1kSuite suite;
  const double planted = l1k_distance(suite.reference(), suite.planted(), suite.k);
  ExperimentConfig cfg;
  cfg.trials = 60;
  cfg.seed = seed ^ 0x5a5a5a5aULL;
  cfg.target_error = 0.2;
  cfg.bisection_steps = 4;
  const CalibrationResult cal = calibrate(suite, cfg, 1.0);
  const double C = cal.C;

  auto [null, alt] = run_both_sides(suite, C, 200, 1, seed, 5, 0);
  const double null_accept = 1.0 - reject_rate(null);
  const double alt_reject = reject_rate(alt);
  std::vector<TrialOutcome> all(null);
  all.insert(all.end(), alt.begin(), alt.end());
  const double realized = mean_samples(all);

  // m_s = C b / eps'^2 with b = 1/sqrt(k), eps' = eps/sqrt(2k) gives
  // 2 C sqrt(k)/eps^2 per repetition; r repetitions run in total.
  const double shape = std::sqrt(static_cast<double>(suite.k)) / (suite.eps * suite.eps);
  const double r = repetitions_for(suite.delta);
  const double expected = suite.expected_samples(C);
  const bool formula_ok = std::abs(expected - 2.0 * r * C * shape) <= 1e-9 * expected;
  const bool realized_ok = realized <= expected + 4.0 * std::sqrt(expected);
  const bool pass = cal.converged && planted >= suite.eps && null_accept >= 0.8 && alt_reject >= 0.8 &&
                    formula_ok && realized_ok;
  return {pass, format("calibrated C = %.4g; planted |p-q|_{1,k} = %.3f; null accept %.3f, "
                       "alt reject %.3f (200 trials each); expected q-draws %.0f = 2 r C sqrt(k)/eps^2 "
                       "(r = %.0f), realized mean %.0f; literal ratio to C sqrt(k)/eps^2 = %.1f",
                       C, planted, null_accept, alt_reject, expected, r, realized,
                       expected / (C * shape))};
}

// ------------------------------------------------------------ 6. chi metric

Outcome chi_identities(std::uint64_t seed) {
  Rng rng = make_stream(seed, {6});
  bool uu = true;
  for (std::size_t d = 1; d <= 3; ++d) {
    const Histogram u = Histogram::uniform(d);
    uu = uu && std::abs(chi_metric(u, u, u) - 1.0) <= 1e-9;
  }
  int self_ok = 0;
  double self_gap = 0.0;
  for (int t = 0; t < 20; ++t) {
    const double eps = 0.05 + 0.95 * uniform01(rng);
    Histogram q = Histogram::uniform(1);
    std::size_t d = 1;
    switch (t % 3) {
      case 0: q = sample_oneD(2 * (1 + uniform_index(rng, 32)), eps, rng); break;
      case 1:
        d = 1 + uniform_index(rng, 3);
        q = sample_checkerboard(static_cast<int>(uniform_index(rng, 5)), d, eps, rng);
        break;
      default:
        d = 2;
        q = sample_regionQ(1 + uniform_index(rng, 4), 3, 2, eps, rng, nullptr);
    }
    const double gap = std::abs(chi_metric(Histogram::uniform(d), q, q) - (1.0 + eps * eps));
    self_gap = std::max(self_gap, gap);
    self_ok += gap <= 1e-9;
  }
  int cross_ok = 0, cross_done = 0;
  double cross_gap = 0.0;
  while (cross_done < 50) {
    const std::size_t d = 2 + uniform_index(rng, 2);
    const int m = 1 + static_cast<int>(uniform_index(rng, 4));
    const double eps = 0.05 + 0.95 * uniform01(rng);
    const Checkerboard a = sample_checkerboard_member(m, d, eps, rng);
    const Checkerboard b = sample_checkerboard_member(m, d, eps, rng);
    if (a.vector.parts == b.vector.parts) continue;
    ++cross_done;
    const double gap = std::abs(chi_metric(Histogram::uniform(d), a.histogram, b.histogram) - 1.0);
    cross_gap = std::max(cross_gap, gap);
    cross_ok += gap <= 1e-9;
  }
  return {uu && self_ok == 20 && cross_ok == 50,
          format("chi_U(U,U) = 1: %s; chi_U(q,q) = 1 + eps^2: %d/20 (max gap %.2g); cross-scale "
                 "chi_U(p,q) = 1: %d/50 (max gap %.2g)",
                 uu ? "yes" : "no", self_ok, self_gap, cross_ok, cross_gap)};
}

// ------------------------------------------------------------ 7. ensembles

Outcome ensemble_distances(std::uint64_t seed) {
  Rng rng = make_stream(seed, {7});
  int members = 0, ok = 0;
  double worst = 0.0;
  auto check = [&](const Histogram& q, std::size_t pieces, double eps) {
    ++members;
    const double gap = std::abs(l1_distance(q, Histogram::uniform(q.dim())) - eps);
    worst = std::max(worst, gap);
    ok += gap <= 1e-9 && q.size() == pieces;
  };
  for (int t = 0; t < 100; ++t) {
    const double eps = 0.05 + 0.95 * uniform01(rng);
    const std::size_t k = 2 * (1 + uniform_index(rng, 64));
    check(sample_oneD(k, eps, rng), k, eps);
  }
  for (int t = 0; t < 100; ++t) {
    const double eps = 0.05 + 0.95 * uniform01(rng);
    const std::size_t d = 1 + uniform_index(rng, 3);
    const int m = static_cast<int>(uniform_index(rng, 6));
    check(sample_checkerboard(m, d, eps, rng), std::size_t{1} << (m + static_cast<int>(d)), eps);
  }
  for (int t = 0; t < 100; ++t) {
    const double eps = 0.05 + 0.95 * uniform01(rng);
    const std::size_t d = 1 + uniform_index(rng, 3);
    const int m = static_cast<int>(uniform_index(rng, 5));
    const std::size_t n = 1 + uniform_index(rng, 6);
    check(sample_regionQ(n, m, d, eps, rng, nullptr), n << (m + static_cast<int>(d)), eps);
  }
  return {ok == members, format("%d/%d members of oneD, checkerboard and regionQ have |q-U|_1 = eps "
                                "and the advertised piece count; max gap %.2g",
                                ok, members, worst)};
}

// ------------------------------------------------------------ 8, 11. power

const EnsembleSpec kPowerSpec = EnsembleSpec::resolve(EnsembleKind::kRegionQ, 32, 2, 0.5);

double calibrated_power_C(std::uint64_t seed) {
  static double cached = 0.0;
  static std::uint64_t cached_seed = 0;
  if (cached > 0.0 && cached_seed == seed) return cached;
  const IdentitySuite suite{kPowerSpec};
  ExperimentConfig cfg;
  cfg.trials = 30;
  cfg.seed = seed ^ 0xc0ffeeULL;
  cfg.bisection_steps = 4;
  cached = calibrate(suite, cfg, 1e-5).C;
  cached_seed = seed;
  return cached;
}

Outcome end_to_end_power(std::uint64_t seed) {
  const double C = calibrated_power_C(seed);
  const IdentitySuite suite{kPowerSpec};
  auto [null, alt] = run_both_sides(suite, C, 60, 1, seed, kPowerId, 8);
  const double null_accept = 1.0 - reject_rate(null);
  const double alt_reject = reject_rate(alt);
  // The promise: fresh regionQ draws sit at L1 distance eps from uniform.
  Rng rng = make_stream(seed, {8});
  double gap = 0.0;
  for (int t = 0; t < 20; ++t) {
    gap = std::max(gap, std::abs(l1_distance(sample_ensemble(kPowerSpec, rng), Histogram::uniform(2)) -
                                 kPowerSpec.eps));
  }
  const Reduction red = reduction_for(kPowerSpec.k, kPowerSpec.d, kPowerSpec.eps);
  return {null_accept >= 2.0 / 3.0 && alt_reject >= 2.0 / 3.0 && gap <= 1e-9,
          format("regionQ n = %zu, m = %d; calibrated C = %.4g; budget %.0f expected q-draws "
                 "(ell = %llu, K = %.0f); null accept %.3f, alt reject %.3f (60 trials each); "
                 "max |q-U|_1 - eps gap %.2g",
                 kPowerSpec.n, kPowerSpec.m, C, suite.expected_samples(C),
                 static_cast<unsigned long long>(red.ell), red.K, null_accept, alt_reject, gap)};
}

Outcome robustness(std::uint64_t seed) {
  const double C = calibrated_power_C(seed);
  const double eta = kPowerSpec.eps / 10.0;
  const IdentitySuite suite{kPowerSpec, 1.0 / 3.0, eta, 0.0};
  auto [null, alt] = run_both_sides(suite, 2.0 * C, 60, 1, seed, kRobustnessId, 11);
  const double alt_reject = reject_rate(alt);
  return {alt_reject >= 0.5,
          format("eta = %.3g, budget 2C = %.4g; alt reject %.3f over 60 trials (null reject %.3f)", eta,
                 2.0 * C, alt_reject, reject_rate(null))};
}

// ------------------------------------------------------------ 9. soundness

Outcome soundness_signal(std::uint64_t seed) {
  Rng rng = make_stream(seed, {9});
  int done = 0, ok = 0, ok_l1 = 0;
  double min_ratio = 1e300;
  while (done < 20) {
    const std::size_t d = 1 + static_cast<std::size_t>(done % 2);
    const std::size_t k = 2 + uniform_index(rng, d == 1 ? 6 : 2);
    const Histogram p = random_histogram(d, k, rng, 0.2);
    const Histogram q = random_histogram(d, k, rng, 0.2);
    const double dist = l1_distance(p, q);
    if (dist < 0.3) continue;
    // The pair sits exactly at the threshold: |p - q|_1 = eps.
    const double eps = std::min(1.0, dist);
    const Reduction red = reduction_for(k, d, eps);
    const Covering cov = Covering::with_levels(p, red.m);
    ReducedKnown known(p, cov);
    const auto [pp, qq] = known.exact_pair(q);
    const std::size_t K = std::min(static_cast<std::size_t>(red.K), pp.size());
    const double signal = l1k_distance(pp, qq, K);
    ++done;
    ok += signal >= red.eps_l1k - 1e-9;
    ok_l1 += signal >= eps / (8.0 * static_cast<double>(red.ell)) - 1e-9;
    min_ratio = std::min(min_ratio, signal / red.eps_l1k);
  }
  return {ok == 20, format("%d/20 pairs have |p'-q'|_{1,2kj} >= eps_tv/(8 ell) (eps_tv = |p-q|_1/2); "
                           "min ratio %.3f; L1 reading eps/(8 ell): %d/20",
                           ok, min_ratio, ok_l1)};
}

// ------------------------------------------------------------ 10. scaling

Outcome scaling(std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.ks = {8, 16, 32, 64, 128, 256, 512};
  cfg.ds = {1};
  cfg.epss = {0.5};
  cfg.ensemble = EnsembleKind::kCheckerboard;
  cfg.trials = 20;
  cfg.bisection_steps = 4;
  cfg.C = 1e-3;
  cfg.seed = seed;
  cfg.time_limit = 55 * 60;
  const ScalingResult r = run_scaling(cfg);
  std::ostringstream budgets;
  for (std::size_t i = 0; i < r.budgets.size(); ++i) {
    budgets << (i ? ", " : "") << cfg.ks[i] << ":" << static_cast<long long>(r.budgets[i]);
  }
  double max_resid = 0.0;
  for (double v : r.residuals) max_resid = std::max(max_resid, std::abs(v));
  return {!r.partial && r.slope >= 0.35 && r.slope <= 0.65,
          format("fitted slope %.3f (target [0.35, 0.65]); max |residual| %.3f; budgets %s%s", r.slope,
                 max_resid, budgets.str().c_str(), r.partial ? " (partial)" : "")};
}

}  // namespace
}  // namespace histest

int main() {
  using namespace histest;
  const std::uint64_t seed = default_seed();
  std::printf("acceptance run: seed %llu, build %s\n", static_cast<unsigned long long>(seed), kBuildId);
  const std::vector<Criterion> criteria{
      {1, "covering contract", 60, covering_contract},
      {2, "point coverage", 10, point_coverage},
      {3, "split lemma", 30, split_lemma},
      {4, "split distributions preserve L1", 5, fact_2_5},
      {5, "l1^k tester operating point", 300, l1k_operating_point},
      {6, "chi-metric identities", 60, chi_identities},
      {7, "ensemble distances", 30, ensemble_distances},
      {8, "end-to-end tester power", 900, end_to_end_power},
      {9, "soundness signal", 120, soundness_signal},
      {10, "sample-complexity scaling", 3600, scaling},
      {11, "robustness", 900, robustness},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run(seed);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.limit_seconds;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("%s criterion %d (%s): %.1fs of %.0fs%s; %s\n", pass ? "PASS" : "FAIL", c.id, c.name,
                secs, c.limit_seconds, in_time ? "" : " [over time]", o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
