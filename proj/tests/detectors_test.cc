// Copyright 2026 The edgebench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "edgebench/detectors.h"
#include "support/oracles.h"

namespace edgebench {
namespace {

using testing::brute_aic_order;
using testing::brute_offline_cusum;

std::vector<double> white(std::int64_t n, std::uint64_t seed) {
  return generate_series({.n = n, .change_t = std::nullopt, .mu0 = 0.0, .mu1 = 0.0,
                          .sigma = 1.0, .seed = seed});
}

std::vector<double> ar1(std::int64_t n, double phi, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0xa5a5a5a5ULL);
  std::normal_distribution<double> z;
  std::vector<double> x(static_cast<std::size_t>(n));
  double prev = z(rng) / std::sqrt(1.0 - phi * phi);
  for (auto& v : x) {
    prev = phi * prev + z(rng);
    v = prev;
  }
  return x;
}

// First monitoring alarm over a series whose first training_m points train.
std::optional<std::int64_t> first_alarm(const DetectorConfig& cfg,
                                        const std::vector<double>& x) {
  const auto m = static_cast<std::size_t>(cfg.training_m);
  auto det = detector_init(cfg, std::span(x).first(m));
  for (std::size_t i = m; i < x.size(); ++i) {
    if (det->update(x[i]).alarm) return static_cast<std::int64_t>(i - m);
  }
  return std::nullopt;
}

DetectorConfig config(DetectorKind k) {
  DetectorConfig c;
  c.kind = k;
  return c;
}

TEST(Series, ShapeAndDeterminism) {
  const auto a = generate_series({});
  EXPECT_EQ(a.size(), 300u);
  EXPECT_EQ(a, generate_series({}));
  SeriesConfig other;
  other.seed = 1;
  EXPECT_NE(a, generate_series(other));
  const double pre = std::accumulate(a.begin(), a.begin() + 200, 0.0) / 200.0;
  const double post = std::accumulate(a.begin() + 200, a.end(), 0.0) / 100.0;
  EXPECT_NEAR(post - pre, 2.0, 0.5);
  EXPECT_THROW(generate_series({.n = 10, .change_t = 10}), DetectorError);
  EXPECT_THROW(generate_series({.n = 10, .change_t = 0}), DetectorError);
}

TEST(Registry, Ids) {
  std::vector<std::string> ids;
  for (auto k : all_detector_kinds()) ids.emplace_back(to_string(k));
  EXPECT_EQ(ids, (std::vector<std::string>{"tcusum", "rt-cusum", "pcusum", "rbocp",
                                           "offline-cusum"}));
  for (auto k : all_detector_kinds()) {
    EXPECT_EQ(parse_detector_kind(to_string(k)), k);
    EXPECT_EQ(is_online(k), k != DetectorKind::kOfflineCusum);
  }
  EXPECT_FALSE(parse_detector_kind("cusum"));
}

TEST(Config, JsonDefaultsAndRoundTrip) {
  const auto c = DetectorConfig::from_json(R"({"kind": "tcusum", "h": 5})");
  EXPECT_EQ(c.kind, DetectorKind::kTCusum);
  EXPECT_EQ(c.h, 5.0);
  EXPECT_EQ(c.k, 0.5);
  EXPECT_EQ(c.training_m, 100);
  const auto back = DetectorConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  EXPECT_THROW(DetectorConfig::from_json(R"({"kind": "nope"})"), DetectorError);
  EXPECT_THROW(DetectorConfig::from_json(R"({"kind": "rbocp", "hazard": 1.5})"),
               DetectorError);
  EXPECT_THROW(DetectorConfig::from_json(R"({"kind": "pcusum", "ar_max_order": 30})"),
               DetectorError);
}

TEST(Init, RejectsBadTraining) {
  const std::vector<double> few(10, 1.0);
  EXPECT_THROW(detector_init(config(DetectorKind::kTCusum), few), DetectorError);
  const std::vector<double> flat(100, 3.0);
  for (auto k : {DetectorKind::kTCusum, DetectorKind::kRtCusum, DetectorKind::kPCusum,
                 DetectorKind::kRBocp}) {
    EXPECT_THROW(detector_init(config(k), flat), DetectorError) << to_string(k);
  }
  auto x = white(100, 1);
  x[5] = std::nan("");
  EXPECT_THROW(detector_init(config(DetectorKind::kTCusum), x), DetectorError);
  EXPECT_THROW(detector_init(config(DetectorKind::kOfflineCusum), white(100, 1)),
               DetectorError);
  EXPECT_THROW(detector_init(config(DetectorKind::kPCusum), white(40, 1)), DetectorError);
  auto det = detector_init(config(DetectorKind::kTCusum), white(100, 1));
  EXPECT_THROW(det->update(INFINITY), DetectorError);
}

TEST(Init, TrainingEstimates) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto det = detector_init(config(DetectorKind::kTCusum), white(100, seed));
    EXPECT_LT(std::abs(det->training().mean), 0.4);
    EXPECT_GE(det->training().sd, 0.7);
    EXPECT_LE(det->training().sd, 1.3);
    EXPECT_EQ(det->training().m, 100);
  }
}

TEST(TCusum, DetectsTwoSigmaShiftQuickly) {
  DetectorConfig c = config(DetectorKind::kTCusum);
  c.h = 5.0;
  int quick = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    // Step at the first monitoring sample.
    const auto a = first_alarm(
        c, generate_series({.n = 200, .change_t = 100, .mu1 = 2.0, .seed = seed}));
    if (a && *a < 10) ++quick;
  }
  EXPECT_GE(quick, 95);
}

TEST(TCusum, NonnegativeAndLatched) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    SeriesConfig s;
    s.seed = seed;
    const auto x = generate_series(s);
    CusumDetector det(config(DetectorKind::kTCusum),
                      training_stats(std::span(x).first(100)));
    bool seen = false;
    for (std::size_t i = 100; i < x.size(); ++i) {
      const auto out = det.update(x[i]);
      EXPECT_GE(det.s_plus(), 0.0);
      EXPECT_GE(det.s_minus(), 0.0);
      if (seen) EXPECT_TRUE(out.alarm);
      seen = seen || out.alarm;
    }
    EXPECT_LE(det.alarms().size(), 1u);
  }
}

TEST(TCusum, DetectsDownwardShift) {
  SeriesConfig s;
  s.mu1 = -2.0;
  const auto a = first_alarm(config(DetectorKind::kTCusum), generate_series(s));
  ASSERT_TRUE(a);
  EXPECT_GE(*a, 100);
}

// Multiplying a stream by c leaves every online decision unchanged.
TEST(Detectors, ScaleInvariance) {
  for (auto kind : {DetectorKind::kTCusum, DetectorKind::kRtCusum, DetectorKind::kPCusum,
                    DetectorKind::kRBocp}) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      SeriesConfig s;
      s.seed = seed;
      const auto x = generate_series(s);
      const auto base = first_alarm(config(kind), x);
      for (double c : {0.1, 3.0, 100.0}) {
        std::vector<double> y(x);
        for (auto& v : y) v *= c;
        EXPECT_EQ(first_alarm(config(kind), y), base)
            << to_string(kind) << " seed " << seed << " c " << c;
      }
    }
  }
}

TEST(RtCusum, StatisticMatchesDirectFormula) {
  const auto x = generate_series({});
  const std::span<const double> train = std::span(x).first(100);
  RatioCusumDetector det(config(DetectorKind::kRtCusum), train);
  const double mean = std::accumulate(train.begin(), train.end(), 0.0) / 100.0;
  double norm = 0.0;
  for (std::size_t j = 1; j <= 100; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < j; ++i) s += train[i] - mean;
    norm = std::max(norm, std::abs(s));
  }
  const double tsum = std::accumulate(train.begin(), train.end(), 0.0);
  for (std::size_t t = 1; t <= 200; ++t) {
    double msum = 0.0;
    for (std::size_t i = 0; i < t; ++i) msum += x[100 + i];
    const double want = std::abs(msum - (t / 100.0) * tsum) / (norm * (1.0 + t / 100.0));
    EXPECT_NEAR(det.update(x[99 + t]).statistic, want, 1e-9 * std::max(1.0, want));
  }
}

TEST(PCusum, AicOrderMatchesBruteForce) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto w = white(100, seed);
    EXPECT_EQ(fit_ar_aic(w, 5).order, brute_aic_order(w, 5)) << seed;
    const auto a = ar1(100, 0.7, seed);
    EXPECT_EQ(fit_ar_aic(a, 5).order, brute_aic_order(a, 5)) << seed;
  }
}

// Order 0 on white noise, 100 training windows of 100 points. The frozen
// count was computed with brute_aic_order.
TEST(PCusum, WhiteNoiseSelectionFrequency) {
  constexpr int kFrozenOrderZero = 76;
  int lib = 0;
  int oracle = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto w = white(100, seed);
    lib += fit_ar_aic(w, 5).order == 0;
    oracle += brute_aic_order(w, 5) == 0;
  }
  EXPECT_EQ(lib, oracle);
  EXPECT_EQ(oracle, kFrozenOrderZero);
}

TEST(PCusum, RecoversAr1Coefficient) {
  const auto a = ar1(2000, 0.6, 3);
  const ArFit f = fit_ar_aic(a, 5);
  ASSERT_GE(f.order, 1);
  EXPECT_NEAR(f.coefficients[1], 0.6, 0.08);
  EXPECT_THROW(fit_ar_aic(white(10, 0), 5), DetectorError);
}

TEST(PCusum, FewerFalseAlarmsThanTCusumOnAr1) {
  int t_fa = 0;
  int p_fa = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto x = ar1(300, 0.6, seed);
    t_fa += first_alarm(config(DetectorKind::kTCusum), x).has_value();
    p_fa += first_alarm(config(DetectorKind::kPCusum), x).has_value();
  }
  EXPECT_LT(p_fa, t_fa);
}

TEST(PCusum, NonnegativeStatistics) {
  const auto x = generate_series({});
  ArCusumDetector det(config(DetectorKind::kPCusum), std::span(x).first(100));
  for (std::size_t i = 100; i < x.size(); ++i) {
    det.update(x[i]);
    EXPECT_GE(det.s_plus(), 0.0);
    EXPECT_GE(det.s_minus(), 0.0);
  }
}

TEST(RBocp, PosteriorNormalizedAndSupportGrows) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> z;
  std::vector<double> train(100);
  for (auto& v : train) v = z(rng);
  BocpDetector det(config(DetectorKind::kRBocp), training_stats(train));
  EXPECT_EQ(det.support_size(), 1u);
  double level = 0.0;
  for (int i = 0; i < 10000; ++i) {
    if (i % 700 == 350) level += 4.0;  // force occasional restarts
    const std::size_t before = det.support_size();
    const int restarts = det.restarts();
    det.update(level + z(rng));
    if (det.restarts() == restarts) {
      ASSERT_EQ(det.support_size(), before + 1) << i;
    } else {
      ASSERT_EQ(det.support_size(), 1u) << i;
    }
    const auto p = det.posterior();
    const double sum = std::accumulate(p.begin(), p.end(), 0.0);
    ASSERT_NEAR(sum, 1.0, 1e-9) << i;
    for (double v : p) ASSERT_GE(v, 0.0);
  }
  EXPECT_GT(det.restarts(), 0);
}

TEST(RBocp, MapRunLengthTracksStableStream) {
  const auto x = white(400, 5);
  BocpDetector det(config(DetectorKind::kRBocp), training_stats(std::span(x).first(100)));
  for (std::size_t i = 100; i < x.size(); ++i) det.update(x[i]);
  if (det.alarms().empty()) EXPECT_GT(det.map_run_length(), 100);
}

TEST(Offline, StepChange) {
  const std::vector<double> x = {0, 0, 0, 0, 10, 10, 10, 10};
  const OfflineResult r = offline_cusum(x);
  EXPECT_EQ(r.change_estimate, 4);
  // 20 / (sqrt(200 / 7) * sqrt(8)), just below the critical value.
  EXPECT_NEAR(r.statistic, 20.0 / (std::sqrt(200.0 / 7.0) * std::sqrt(8.0)), 1e-12);
  EXPECT_FALSE(r.alarm);
}

TEST(Offline, LinearSeriesPeaksInTheMiddle) {
  for (int n : {10, 11, 50, 101, 200}) {
    std::vector<double> x(static_cast<std::size_t>(n));
    std::iota(x.begin(), x.end(), 0.0);
    const auto r = offline_cusum(x);
    EXPECT_LE(std::abs(r.change_estimate - n / 2), 1) << n;
  }
}

TEST(Offline, MatchesBruteForce) {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 100; ++i) {
    const auto n = static_cast<std::int64_t>(2 + rng() % 199);
    SeriesConfig s;
    s.n = n;
    s.seed = rng();
    s.change_t = n > 2 ? std::optional<std::int64_t>(1 + rng() % (n - 1)) : std::nullopt;
    const auto x = generate_series(s);
    const auto want = brute_offline_cusum(x);
    const auto got = offline_cusum(x);
    EXPECT_NEAR(got.statistic, want.statistic, 1e-12);
    EXPECT_EQ(got.change_estimate, want.argmax);
  }
}

TEST(Offline, NullFalseAlarmRate) {
  int alarms = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    alarms += offline_cusum(white(500, seed)).alarm;
  }
  EXPECT_GE(alarms, 20);
  EXPECT_LE(alarms, 90);
}

TEST(Offline, Rejects) {
  EXPECT_THROW(offline_cusum(std::vector<double>{1.0}), DetectorError);
  EXPECT_THROW(offline_cusum(std::vector<double>(5, 2.0)), DetectorError);
}

TEST(Gap, PointsAndMilliseconds) {
  std::vector<double> sent(50);
  for (std::size_t i = 0; i < sent.size(); ++i) sent[i] = 10.0 * static_cast<double>(i);
  auto g = compute_gap_metrics(30, 20, sent);
  EXPECT_EQ(g.outcome, GapMetrics::Outcome::kDetected);
  EXPECT_EQ(g.gap_points, 10);
  EXPECT_DOUBLE_EQ(g.gap_ms, 100.0);
  g = compute_gap_metrics(30, 20, sent, 312.5);
  EXPECT_DOUBLE_EQ(g.gap_ms, 112.5);
  g = compute_gap_metrics(5, 20, sent);
  EXPECT_EQ(g.outcome, GapMetrics::Outcome::kFalseAlarm);
  EXPECT_EQ(g.gap_points, -15);
  EXPECT_THROW(compute_gap_metrics(50, 20, sent), std::out_of_range);
}

TEST(Gap, MillisecondsBoundedBelowByInterval) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> extra(0.0, 3.0);
  const double interval = 5.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> sent(200);
    double now = 0.0;
    for (auto& s : sent) {
      s = now;
      now += interval + extra(rng);
    }
    const auto change = static_cast<std::int64_t>(rng() % 100);
    const auto alarm = change + static_cast<std::int64_t>(rng() % 100);
    const auto g = compute_gap_metrics(alarm, change, sent);
    EXPECT_GE(g.gap_ms, static_cast<double>(g.gap_points) * interval);
  }
}

}  // namespace
}  // namespace edgebench
