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

// Monte Carlo experiments: power curves, calibration of the l2 constant C,
// sample-complexity scaling and robustness to model misspecification.
//
// Every trial draws from its own stream (seed, experiment, grid point, trial,
// side), so results do not depend on the thread count or schedule, and a
// rerun with the same inputs reproduces the CSV byte for byte.

#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "histest/adversarial.hpp"
#include "histest/discrete_testers.hpp"
#include "histest/histogram.hpp"
#include "histest/identity_tester.hpp"
#include "histest/rng.hpp"

#ifndef HISTEST_BUILD_ID
#define HISTEST_BUILD_ID "unknown"
#endif

namespace histest {

inline constexpr const char* kBuildId = HISTEST_BUILD_ID;
inline constexpr const char* kSeedEnvVar = "HISTEST_SEED";
inline constexpr std::uint64_t kFallbackSeed = 20260101;

// HISTEST_SEED if set and numeric, else a fixed default.
inline std::uint64_t default_seed() {
  if (const char* s = std::getenv(kSeedEnvVar)) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s, &end, 10);
    if (end != s && *end == '\0') return v;
    throw std::invalid_argument(std::string(kSeedEnvVar) + " is not an unsigned integer");
  }
  return kFallbackSeed;
}

enum ExperimentId : std::uint64_t { kPowerId = 1, kScalingId = 2, kRobustnessId = 3, kCalibrateId = 4 };

// ---------------------------------------------------------------- runner

// Raised when the wall-clock budget runs out; results gathered so far are
// kept and flagged as partial.
class WallClock {
 public:
  explicit WallClock(double limit_seconds = 0.0)
      : start_(std::chrono::steady_clock::now()), limit_(limit_seconds) {}
  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }
  bool expired() const { return limit_ > 0.0 && elapsed() > limit_; }

 private:
  std::chrono::steady_clock::time_point start_;
  double limit_;
};

struct TrialOutcome {
  bool reject = false;
  std::uint64_t samples = 0;
};

// f(i) for i in [0, n) on up to `threads` threads; outcome i lands in slot i.
template <class F>
std::vector<TrialOutcome> run_trials(std::size_t n, unsigned threads, F&& f) {
  std::vector<TrialOutcome> out(n);
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = f(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = next++; i < n; i = next++) out[i] = f(i);
      } catch (...) {
        errors[t] = std::current_exception();
        next = n;
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

inline double reject_rate(std::span<const TrialOutcome> v) {
  if (v.empty()) return 0.0;
  std::size_t r = 0;
  for (const auto& o : v) r += o.reject;
  return static_cast<double>(r) / static_cast<double>(v.size());
}

inline double mean_samples(std::span<const TrialOutcome> v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (const auto& o : v) s += static_cast<double>(o.samples);
  return s / static_cast<double>(v.size());
}

// Upper end of the Wilson score interval for a binomial proportion.
inline double wilson_upper(double rate, std::size_t n, double z) {
  if (n == 0) return 1.0;
  const double nn = static_cast<double>(n), z2 = z * z;
  const double centre = rate + z2 / (2 * nn);
  const double spread = z * std::sqrt(rate * (1 - rate) / nn + z2 / (4 * nn * nn));
  return std::min(1.0, (centre + spread) / (1 + z2 / nn));
}

// ---------------------------------------------------------------- suites

// Null: q = p = uniform. Alternative: a fresh ensemble member per trial,
// optionally mixed with uniform noise of weight eta.
struct IdentitySuite {
  EnsembleSpec spec;
  double delta = 1.0 / 3.0;
  double alt_noise = 0.0;   // q = (1 - eta) q~ + eta U
  double null_noise = 0.0;  // q = (1 - eta) U + eta q~

  IdentityParams params(double C) const { return {spec.k, spec.eps, delta, C}; }
  double expected_samples(double C) const { return identity_expected_samples(params(C), spec.d); }

  TrialOutcome run(double C, bool alt, Rng& rng) const {
    const Histogram u = Histogram::uniform(spec.d);
    std::optional<Histogram> q;
    if (alt) {
      Histogram far = sample_ensemble(spec, rng);
      q = alt_noise > 0.0 ? mix_with_uniform(far, alt_noise) : std::move(far);
    } else if (null_noise > 0.0) {
      q = mix_with_uniform(sample_ensemble(spec, rng), 1.0 - null_noise);
    } else {
      q = u;
    }
    const IdentityVerdict v = test_identity(u, *q, params(C), rng);
    return {v.reject, v.samples_used};
  }
};

// Discrete l1^k suite: p has `heavy` elements holding half the mass; the
// alternative moves `shift` total mass off k/2 heavy elements onto k/2 light
// ones, so |p - q|_{1,k} = 2 shift.
struct L1kSuite {
  std::size_t n = 1000;
  std::size_t k = 20;
  double eps = 0.25;
  double shift = 0.13;
  double delta = 0.1;

  DiscreteDist reference() const {
    std::vector<double> w(n, 0.5 / static_cast<double>(n - k));
    for (std::size_t i = 0; i < k; ++i) w[i] = 0.5 / static_cast<double>(k);
    return DiscreteDist::normalized(std::move(w));
  }
  DiscreteDist planted() const {
    const DiscreteDist ref = reference();
    std::vector<double> w(ref.probs().begin(), ref.probs().end());
    const std::size_t moved = k / 2;
    const double per = shift / static_cast<double>(moved);
    for (std::size_t i = 0; i < moved; ++i) {
      w[i] -= per;
      w[k + i] += per;
    }
    return DiscreteDist::normalized(std::move(w));
  }

  L1kParams params(double C) const { return {static_cast<double>(k), eps, delta, C}; }
  double expected_samples(double C) const { return l1k_expected_samples(params(C)); }

  TrialOutcome run(double C, bool alt, Rng& rng) const {
    const DiscreteDist p = reference();
    const DiscreteDist q = alt ? planted() : p;
    const TestVerdict v = l1k_identity_test(p, q, params(C), rng);
    return {v.reject, v.samples_used};
  }
};

// ---------------------------------------------------------------- results

struct ResultRow {
  std::string experiment;
  std::size_t k = 0;
  std::size_t d = 0;
  double eps = 0.0;
  double budget = 0.0;  // expected draws from q per test
  std::size_t trials = 0;
  double null_reject = 0.0;
  double alt_reject = 0.0;
  double mean_samples = 0.0;  // realized draws from q per test, both sides
  double C = 0.0;
  std::uint64_t seed = 0;
  double eta = 0.0;
  bool partial = false;
};

inline std::string csv_header() {
  return "experiment,k,d,eps,budget,trials,null_reject,alt_reject,mean_samples,C,seed,eta,build,"
         "partial";
}

inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::string to_csv_line(const ResultRow& r) {
  std::ostringstream o;
  o << r.experiment << ',' << r.k << ',' << r.d << ',' << fmt(r.eps) << ',' << fmt(r.budget) << ','
    << r.trials << ',' << fmt(r.null_reject) << ',' << fmt(r.alt_reject) << ','
    << fmt(r.mean_samples) << ',' << fmt(r.C) << ',' << r.seed << ',' << fmt(r.eta) << ','
    << kBuildId << ',' << (r.partial ? 1 : 0);
  return o.str();
}

inline void write_csv(const std::string& path, std::vector<ResultRow> rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    return std::tie(a.experiment, a.d, a.k, a.eps, a.eta, a.C) <
           std::tie(b.experiment, b.d, b.k, b.eps, b.eta, b.C);
  });
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << csv_header() << '\n';
  for (const auto& r : rows) out << to_csv_line(r) << '\n';
}

struct SvgSeries {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

// Minimal line chart. Never throws: figures are a convenience.
inline bool write_svg(const std::string& path, const std::string& title, const std::string& xlabel,
                      const std::string& ylabel, const std::vector<SvgSeries>& series, bool logx,
                      bool logy) noexcept {
  try {
    auto tx = [&](double v) { return logx ? std::log10(v) : v; };
    auto ty = [&](double v) { return logy ? std::log10(v) : v; };
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (const auto& s : series) {
      for (auto [x, y] : s.points) {
        if ((logx && x <= 0) || (logy && y <= 0)) continue;
        x0 = std::min(x0, tx(x)), x1 = std::max(x1, tx(x));
        y0 = std::min(y0, ty(y)), y1 = std::max(y1, ty(y));
      }
    }
    if (x0 > x1) return false;
    if (x1 - x0 < 1e-12) x1 = x0 + 1;
    if (y1 - y0 < 1e-12) y1 = y0 + 1;
    const double W = 640, H = 420, L = 70, R = 150, T = 40, B = 50;
    auto px = [&](double x) { return L + (tx(x) - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double y) { return H - B - (ty(y) - y0) / (y1 - y0) * (H - T - B); };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    std::ofstream o(path);
    if (!o) return false;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\">" << title << "</text>\n"
      << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L
      << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n"
      << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">"
      << xlabel << (logx ? " (log10)" : "") << "</text>\n"
      << "<text x=\"16\" y=\"" << H / 2 << "\" transform=\"rotate(-90 16 " << H / 2
      << ")\" text-anchor=\"middle\">" << ylabel << (logy ? " (log10)" : "") << "</text>\n"
      << "<text x=\"" << L << "\" y=\"" << H - B + 16 << "\">" << fmt(x0) << "</text>\n"
      << "<text x=\"" << W - R << "\" y=\"" << H - B + 16 << "\" text-anchor=\"end\">" << fmt(x1)
      << "</text>\n<text x=\"" << L - 4 << "\" y=\"" << H - B << "\" text-anchor=\"end\">"
      << fmt(y0) << "</text>\n<text x=\"" << L - 4 << "\" y=\"" << T + 4
      << "\" text-anchor=\"end\">" << fmt(y1) << "</text>\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
      const char* c = colors[i % 6];
      o << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"2\" points=\"";
      for (auto [x, y] : series[i].points) {
        if ((logx && x <= 0) || (logy && y <= 0)) continue;
        o << px(x) << ',' << py(y) << ' ';
      }
      o << "\"/>\n<text x=\"" << W - R + 8 << "\" y=\"" << T + 16 * (i + 1) << "\" fill=\"" << c
        << "\">" << series[i].name << "</text>\n";
    }
    o << "</svg>\n";
    return static_cast<bool>(o);
  } catch (...) {
    return false;
  }
}

// ---------------------------------------------------------------- config

struct ExperimentConfig {
  std::vector<std::size_t> ks{32};
  std::vector<std::size_t> ds{2};
  std::vector<double> epss{0.5};
  std::vector<double> Cs{};  // budget grid as values of C; empty means {C}
  EnsembleKind ensemble = EnsembleKind::kRegionQ;
  std::size_t regions = 0;  // regionQ n; 0 picks the largest admissible
  std::size_t trials = 60;
  std::uint64_t seed = kFallbackSeed;
  double C = kDefaultC;
  double delta = 1.0 / 3.0;
  unsigned threads = 1;
  double time_limit = 0.0;  // seconds; 0 disables the guard

  // calibrate
  double target_error = 1.0 / 3.0;
  double confidence_z = 2.0;
  int bisection_steps = 6;

  // scaling
  double power_target = 2.0 / 3.0;

  // robustness: mixing weights as fractions of eps
  std::vector<double> eta_fractions{0.0, 0.05, 0.1};
  double budget_factor = 2.0;

  void check() const {
    if (trials < 1) throw std::invalid_argument("trials must be at least 1");
    if (ks.empty() || ds.empty() || epss.empty()) throw std::invalid_argument("empty parameter grid");
    for (double e : epss) {
      if (!(e > 0.0 && e <= 1.0)) throw std::invalid_argument("eps must be in (0,1]");
    }
    for (double c : Cs) {
      if (!(c > 0.0)) throw std::invalid_argument("budgets must be positive");
    }
    if (!(C > 0.0)) throw std::invalid_argument("C must be positive");
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must be in (0,1)");
    if (!(target_error > 0.0 && target_error < 1.0)) throw std::invalid_argument("bad target error");
    if (!(power_target > 0.0 && power_target < 1.0)) throw std::invalid_argument("bad power target");
  }
};

struct ExperimentResult {
  std::vector<ResultRow> rows;
  bool partial = false;
};

// ---------------------------------------------------------------- power

template <class Suite>
std::pair<std::vector<TrialOutcome>, std::vector<TrialOutcome>> run_both_sides(
    const Suite& suite, double C, std::size_t trials, unsigned threads, std::uint64_t seed,
    std::uint64_t exp_id, std::uint64_t point) {
  auto side = [&](bool alt) {
    return run_trials(trials, threads, [&](std::size_t t) {
      Rng rng = make_stream(seed, {exp_id, point, t, alt ? 1u : 0u});
      return suite.run(C, alt, rng);
    });
  };
  auto null = side(false);
  auto alt = side(true);
  return {std::move(null), std::move(alt)};
}

inline ExperimentResult run_power_curve(const ExperimentConfig& cfg) {
  cfg.check();
  const std::vector<double> cs = cfg.Cs.empty() ? std::vector<double>{cfg.C} : cfg.Cs;
  ExperimentResult res;
  WallClock clock(cfg.time_limit);
  std::uint64_t point = 0;
  for (std::size_t d : cfg.ds) {
    for (std::size_t k : cfg.ks) {
      for (double eps : cfg.epss) {
        const IdentitySuite suite{EnsembleSpec::resolve(cfg.ensemble, k, d, eps, cfg.regions),
                                  cfg.delta};
        for (double C : cs) {
          ++point;
          if (clock.expired()) {
            res.partial = true;
            continue;
          }
          auto [null, alt] = run_both_sides(suite, C, cfg.trials, cfg.threads, cfg.seed, kPowerId, point);
          std::vector<TrialOutcome> all(null);
          all.insert(all.end(), alt.begin(), alt.end());
          res.rows.push_back({"power", k, d, eps, suite.expected_samples(C), cfg.trials,
                              reject_rate(null), reject_rate(alt), mean_samples(all), C, cfg.seed,
                              0.0, false});
        }
      }
    }
  }
  for (auto& r : res.rows) r.partial = res.partial;
  return res;
}

// ---------------------------------------------------------------- calibrate

struct CalibrationRow {
  double C = 0.0;
  double null_error = 0.0;
  double alt_error = 0.0;
  double samples = 0.0;  // realized mean draws from q per test
};

struct CalibrationResult {
  double C = 0.0;
  bool converged = false;
  std::vector<CalibrationRow> rows;  // every evaluated C, sorted by C
  bool partial = false;
};

// Smallest C (up to the bisection resolution) at which both error rates are
// at most target_error, judged by the Wilson upper bound at confidence_z so
// that the chosen C holds up on fresh seeds. Trials reuse their streams
// across values of C, which keeps the search monotone in practice.
template <class Suite>
CalibrationResult calibrate(const Suite& suite, const ExperimentConfig& cfg, double start_C) {
  cfg.check();
  CalibrationResult res;
  WallClock clock(cfg.time_limit);
  std::uint64_t evaluations = 0;
  auto passes = [&](double C) {
    auto [null, alt] =
        run_both_sides(suite, C, cfg.trials, cfg.threads, cfg.seed, kCalibrateId, 0);
    ++evaluations;
    std::vector<TrialOutcome> all(null);
    all.insert(all.end(), alt.begin(), alt.end());
    const double ne = reject_rate(null), ae = 1.0 - reject_rate(alt);
    res.rows.push_back({C, ne, ae, mean_samples(all)});
    return wilson_upper(ne, cfg.trials, cfg.confidence_z) <= cfg.target_error &&
           wilson_upper(ae, cfg.trials, cfg.confidence_z) <= cfg.target_error;
  };
  constexpr double kStep = 4.0;
  constexpr int kMaxExpansions = 24;
  double hi = start_C, lo = start_C;
  bool hi_ok = passes(hi);
  if (hi_ok) {
    for (int i = 0; i < kMaxExpansions && !clock.expired(); ++i) {
      lo = hi / kStep;
      if (!passes(lo)) break;
      hi = lo;
    }
  } else {
    for (int i = 0; i < kMaxExpansions && !hi_ok && !clock.expired(); ++i) {
      lo = hi;
      hi *= kStep;
      hi_ok = passes(hi);
    }
  }
  if (!hi_ok) {
    res.partial = clock.expired();
    res.C = hi;
    std::sort(res.rows.begin(), res.rows.end(), [](auto& a, auto& b) { return a.C < b.C; });
    return res;
  }
  for (int s = 0; s < cfg.bisection_steps && lo < hi; ++s) {
    if (clock.expired()) {
      res.partial = true;
      break;
    }
    const double mid = std::sqrt(lo * hi);
    if (passes(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  res.C = hi;
  res.converged = !res.partial;
  std::sort(res.rows.begin(), res.rows.end(), [](auto& a, auto& b) { return a.C < b.C; });
  return res;
}

inline void write_calibration_csv(const std::string& path, const CalibrationResult& r) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "C,null_error,alt_error,samples\n";
  for (const auto& row : r.rows) {
    out << fmt(row.C) << ',' << fmt(row.null_error) << ',' << fmt(row.alt_error) << ','
        << fmt(row.samples) << '\n';
  }
}

// The artifact other experiments read C from.
inline nlohmann::json calibration_json(const CalibrationResult& r, const nlohmann::json& suite,
                                       std::uint64_t seed, std::size_t trials) {
  return {{"C", r.C},         {"converged", r.converged}, {"partial", r.partial},
          {"suite", suite},   {"seed", seed},             {"trials", trials},
          {"build", kBuildId}};
}

inline double read_calibrated_C(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return nlohmann::json::parse(in).at("C").get<double>();
}

// ---------------------------------------------------------------- scaling

struct ScalingResult {
  std::vector<ResultRow> rows;   // one per k, at the minimal budget found
  std::vector<double> budgets;   // expected q-draws at the minimal C, per k
  double slope = 0.0;
  double intercept = 0.0;
  std::vector<double> residuals;
  bool partial = false;
};

// Least-squares line through (log x, log y).
inline std::pair<double, double> fit_loglog(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw std::invalid_argument("need at least two points to fit");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
  }
  const double nn = static_cast<double>(n);
  const double slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
  return {slope, (sy - slope * sx) / nn};
}

// For each k, the smallest C (log-space bisection) whose alternative
// rejection rate reaches power_target; the budget is the tester's expected
// draw count at that C.
inline ScalingResult run_scaling(const ExperimentConfig& cfg) {
  cfg.check();
  if (cfg.ds.size() != 1 || cfg.epss.size() != 1) {
    throw std::invalid_argument("scaling takes a single d and a single eps");
  }
  const std::size_t d = cfg.ds.front();
  const double eps = cfg.epss.front();
  ScalingResult res;
  WallClock clock(cfg.time_limit);
  std::uint64_t point = 0;
  for (std::size_t k : cfg.ks) {
    ++point;
    if (clock.expired()) {
      res.partial = true;
      break;
    }
    const IdentitySuite suite{EnsembleSpec::resolve(cfg.ensemble, k, d, eps, cfg.regions), cfg.delta};
    auto power = [&](double C) {
      auto alt = run_trials(cfg.trials, cfg.threads, [&](std::size_t t) {
        Rng rng = make_stream(cfg.seed, {kScalingId, point, t, 1});
        return suite.run(C, true, rng);
      });
      return std::pair{reject_rate(alt), mean_samples(alt)};
    };
    double hi = cfg.C, lo = cfg.C;
    auto [p_hi, s_hi] = power(hi);
    if (p_hi >= cfg.power_target) {
      for (int i = 0; i < 24; ++i) {
        lo = hi / 4;
        const auto [p, s] = power(lo);
        if (p < cfg.power_target) break;
        hi = lo, p_hi = p, s_hi = s;
      }
    } else {
      for (int i = 0; i < 24 && p_hi < cfg.power_target; ++i) {
        lo = hi;
        hi *= 4;
        std::tie(p_hi, s_hi) = power(hi);
      }
    }
    for (int s = 0; s < cfg.bisection_steps; ++s) {
      const double mid = std::sqrt(lo * hi);
      const auto [p, smp] = power(mid);
      if (p >= cfg.power_target) {
        hi = mid, p_hi = p, s_hi = smp;
      } else {
        lo = mid;
      }
    }
    const double budget = suite.expected_samples(hi);
    res.budgets.push_back(budget);
    res.rows.push_back({"scaling", k, d, eps, budget, cfg.trials, 0.0, p_hi, s_hi, hi, cfg.seed, 0.0,
                        false});
  }
  if (res.budgets.size() >= 2) {
    std::vector<double> kx;
    for (std::size_t i = 0; i < res.budgets.size(); ++i) kx.push_back(static_cast<double>(cfg.ks[i]));
    std::tie(res.slope, res.intercept) = fit_loglog(kx, res.budgets);
    for (std::size_t i = 0; i < kx.size(); ++i) {
      res.residuals.push_back(std::log(res.budgets[i]) - (res.intercept + res.slope * std::log(kx[i])));
    }
  }
  for (auto& r : res.rows) r.partial = res.partial;
  return res;
}

// ---------------------------------------------------------------- robustness

// At budget_factor times the given C: alternative side q = (1-eta) q~ + eta U
// for far q~, null side q = (1-eta) U + eta q~ (at L1 distance eta eps).
inline ExperimentResult run_robustness(const ExperimentConfig& cfg) {
  cfg.check();
  ExperimentResult res;
  WallClock clock(cfg.time_limit);
  std::uint64_t point = 0;
  for (std::size_t d : cfg.ds) {
    for (std::size_t k : cfg.ks) {
      for (double eps : cfg.epss) {
        for (double frac : cfg.eta_fractions) {
          ++point;
          if (clock.expired()) {
            res.partial = true;
            continue;
          }
          const double eta = frac * eps;
          const IdentitySuite suite{EnsembleSpec::resolve(cfg.ensemble, k, d, eps, cfg.regions),
                                    cfg.delta, eta, eta};
          const double C = cfg.C * cfg.budget_factor;
          auto [null, alt] =
              run_both_sides(suite, C, cfg.trials, cfg.threads, cfg.seed, kRobustnessId, point);
          std::vector<TrialOutcome> all(null);
          all.insert(all.end(), alt.begin(), alt.end());
          res.rows.push_back({"robustness", k, d, eps, suite.expected_samples(C), cfg.trials,
                              reject_rate(null), reject_rate(alt), mean_samples(all), C, cfg.seed,
                              eta, false});
        }
      }
    }
  }
  for (auto& r : res.rows) r.partial = res.partial;
  return res;
}

}  // namespace histest
