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

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "histest/harness.hpp"
#include "histest/histogram_io.hpp"
#include "histest/random_instances.hpp"

namespace histest {
namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("histest_" + name)).string();
}

TEST(Seed, EnvironmentOverridesFallback) {
  ::unsetenv(kSeedEnvVar);
  EXPECT_EQ(default_seed(), kFallbackSeed);
  ::setenv(kSeedEnvVar, "1234", 1);
  EXPECT_EQ(default_seed(), 1234u);
  ::unsetenv(kSeedEnvVar);
}

TEST(Streams, DistinctPathsGiveDistinctStreams) {
  Rng a = make_stream(1, {1, 0, 0, 0}), b = make_stream(1, {1, 0, 0, 1}), c = make_stream(1, {1, 0, 0, 0});
  const auto va = a(), vb = b(), vc = c();
  EXPECT_NE(va, vb);
  EXPECT_EQ(va, vc);
}

TEST(RunTrials, ResultsIndependentOfThreadCount) {
  auto f = [](std::size_t t) {
    Rng rng = make_stream(7, {t});
    return TrialOutcome{uniform01(rng) < 0.5, rng() % 1000};
  };
  const auto one = run_trials(50, 1, f), four = run_trials(50, 4, f);
  ASSERT_EQ(one.size(), four.size());
  for (std::size_t i = 0; i < one.size(); ++i) {
    EXPECT_EQ(one[i].reject, four[i].reject);
    EXPECT_EQ(one[i].samples, four[i].samples);
  }
  EXPECT_THROW(run_trials(4, 2, [](std::size_t) -> TrialOutcome { throw std::runtime_error("x"); }),
               std::runtime_error);
}

TEST(Wilson, KnownValues) {
  EXPECT_EQ(wilson_upper(0.0, 0, 2.0), 1.0);
  EXPECT_NEAR(wilson_upper(0.0, 30, 2.0), 4.0 / 34.0, 1e-12);
  EXPECT_GT(wilson_upper(0.2, 60, 2.0), 0.2);
  EXPECT_LT(wilson_upper(0.2, 600, 2.0), wilson_upper(0.2, 60, 2.0));
}

TEST(FitLogLog, RecoversPowerLaw) {
  const std::vector<double> x{8, 16, 32, 64}, y{3 * std::sqrt(8.0), 3 * 4.0, 3 * std::sqrt(32.0), 24};
  const auto [slope, intercept] = fit_loglog(x, y);
  EXPECT_NEAR(slope, 0.5, 1e-12);
  EXPECT_NEAR(intercept, std::log(3.0), 1e-12);
  EXPECT_THROW(fit_loglog(std::vector<double>{1.0}, std::vector<double>{1.0}), std::invalid_argument);
}

TEST(Csv, FixedColumnsAndSortedRows) {
  std::vector<ResultRow> rows{{"power", 64, 1, 0.5, 1000, 10, 0.1, 0.9, 990, 1e-3, 5, 0, false},
                              {"power", 16, 1, 0.5, 500, 10, 0.2, 0.8, 510, 1e-3, 5, 0, false}};
  const std::string path = temp_path("rows.csv");
  write_csv(path, rows);
  const std::string text = slurp(path);
  std::istringstream in(text);
  std::string header, first, second;
  std::getline(in, header);
  std::getline(in, first);
  std::getline(in, second);
  EXPECT_EQ(header.rfind("experiment,k,d,eps,budget,trials,null_reject,alt_reject,mean_samples,C,seed", 0), 0u);
  EXPECT_EQ(first.rfind("power,16,1,0.5,500,10,0.2,0.8,510,0.001,5,0,", 0), 0u);
  EXPECT_EQ(second.rfind("power,64,", 0), 0u);
  std::filesystem::remove(path);
}

TEST(Config, Check) {
  ExperimentConfig cfg;
  EXPECT_NO_THROW(cfg.check());
  cfg.trials = 0;
  EXPECT_THROW(cfg.check(), std::invalid_argument);
  cfg.trials = 1;
  cfg.ks.clear();
  EXPECT_THROW(cfg.check(), std::invalid_argument);
  cfg.ks = {4};
  cfg.Cs = {-1.0};
  EXPECT_THROW(cfg.check(), std::invalid_argument);
}

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.ks = {8};
  cfg.ds = {1};
  cfg.epss = {0.5};
  cfg.ensemble = EnsembleKind::kOneD;
  cfg.trials = 6;
  cfg.seed = 77;
  cfg.C = 2e-3;
  return cfg;
}

TEST(PowerCurve, ByteIdenticalReruns) {
  const ExperimentConfig cfg = small_config();
  const std::string a = temp_path("power_a.csv"), b = temp_path("power_b.csv");
  const auto r1 = run_power_curve(cfg);
  write_csv(a, r1.rows);
  ExperimentConfig threaded = cfg;
  threaded.threads = 3;
  write_csv(b, run_power_curve(threaded).rows);
  EXPECT_EQ(slurp(a), slurp(b));
  ASSERT_EQ(r1.rows.size(), 1u);
  EXPECT_GE(r1.rows[0].null_reject, 0.0);
  EXPECT_LE(r1.rows[0].alt_reject, 1.0);
  EXPECT_EQ(r1.rows[0].C, cfg.C);
  std::filesystem::remove(a);
  std::filesystem::remove(b);
}

TEST(PowerCurve, TimeLimitMarksPartial) {
  ExperimentConfig cfg = small_config();
  cfg.Cs = {1e-3, 2e-3, 4e-3};
  cfg.time_limit = 1e-9;
  const auto r = run_power_curve(cfg);
  EXPECT_TRUE(r.partial);
}

TEST(Calibrate, FindsPassingC) {
  L1kSuite suite;
  ExperimentConfig cfg;
  cfg.trials = 20;
  cfg.seed = 3;
  cfg.bisection_steps = 2;
  cfg.target_error = 0.2;
  const CalibrationResult r = calibrate(suite, cfg, 0.5);
  ASSERT_TRUE(r.converged);
  bool found = false;
  for (const auto& row : r.rows) {
    if (row.C == r.C) {
      found = true;
      EXPECT_LE(wilson_upper(row.null_error, cfg.trials, cfg.confidence_z), cfg.target_error);
      EXPECT_LE(wilson_upper(row.alt_error, cfg.trials, cfg.confidence_z), cfg.target_error);
    }
  }
  EXPECT_TRUE(found);
  const std::string path = temp_path("cal.json");
  write_json_file(path, calibration_json(r, {{"suite", "l1k"}}, cfg.seed, cfg.trials));
  EXPECT_DOUBLE_EQ(read_calibrated_C(path), r.C);
  std::filesystem::remove(path);
}

TEST(L1kSuite, PlantedDistanceExceedsEps) {
  const L1kSuite s;
  EXPECT_NEAR(l1k_distance(s.reference(), s.planted(), s.k), 2 * s.shift, 1e-12);
  EXPECT_GE(l1k_distance(s.reference(), s.planted(), s.k), s.eps);
}

TEST(Robustness, EtaZeroMatchesPowerCurveAlternative) {
  ExperimentConfig cfg = small_config();
  cfg.eta_fractions = {0.0};
  cfg.budget_factor = 1.0;
  const auto rob = run_robustness(cfg);
  const auto pow = run_power_curve(cfg);
  ASSERT_EQ(rob.rows.size(), 1u);
  // Different experiment ids draw different streams; both must be sane rates.
  EXPECT_GE(rob.rows[0].alt_reject, 0.0);
  EXPECT_LE(rob.rows[0].alt_reject, 1.0);
  EXPECT_EQ(rob.rows[0].budget, pow.rows[0].budget);
}

TEST(Svg, WritesFileAndNeverThrows) {
  const std::string path = temp_path("plot.svg");
  EXPECT_TRUE(write_svg(path, "t", "x", "y", {{"s", {{1, 1}, {2, 2}, {4, 3}}}}, true, false));
  EXPECT_NE(slurp(path).find("<svg"), std::string::npos);
  EXPECT_FALSE(write_svg("/nonexistent-dir/x.svg", "t", "x", "y", {{"s", {{1, 1}}}}, false, false));
  std::filesystem::remove(path);
}

TEST(HistogramIo, RoundTrips) {
  Rng rng = make_stream(81);
  const Histogram h = random_histogram(2, 7, rng);
  const Histogram back = histogram_from_json(to_json(h));
  EXPECT_EQ(l1_distance(h, back), 0.0);
  const DiscreteDist p = random_discrete(5, rng);
  const DiscreteDist pb = discrete_from_json(to_json(p));
  EXPECT_EQ(l1_distance(p, pb), 0.0);
  EXPECT_THROW(histogram_from_json(nlohmann::json{{"dim", 1}, {"pieces", nlohmann::json::array()}}),
               ValidationError);
}

}  // namespace
}  // namespace histest
