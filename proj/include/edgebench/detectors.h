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

// Mean-change detectors for univariate streams.
//
// Every online detector is trained on the first `training_m` samples, from
// which it takes the mean and sample standard deviation, then monitors one
// sample at a time:
//
//   tcusum         two-sided Page CUSUM, drift k and threshold h in units
//                  of the training standard deviation.
//   rt-cusum       open-end ratio statistic
//                    |sum_{i=m+1}^{m+t} x_i - (t/m) sum_{i=1}^{m} x_i|
//                    / max_j |sum_{i<=j} (x_i - mean_m)|
//                  alarming above c * (1 + t/m).
//   pcusum         AR(p) fitted on training by least squares, order by AIC,
//                  two-sided CUSUM on the one-step-ahead residuals.
//   rbocp          run-length recursion with constant hazard and a
//                  Normal-Gamma model, reset to a point mass after alarms.
//   offline-cusum  batch statistic max_t |S_t - (t/n) S_n| / (sd sqrt(n)).

#ifndef EDGEBENCH_DETECTORS_H_
#define EDGEBENCH_DETECTORS_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace edgebench {

enum class DetectorKind { kTCusum, kRtCusum, kPCusum, kRBocp, kOfflineCusum };

std::string_view to_string(DetectorKind k);
std::optional<DetectorKind> parse_detector_kind(std::string_view s);
const std::vector<DetectorKind>& all_detector_kinds();
bool is_online(DetectorKind k);

class DetectorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Piecewise-Gaussian series: N(mu0, sigma^2) before change_t, N(mu1,
// sigma^2) from change_t on.
struct SeriesConfig {
  std::int64_t n = 300;
  std::optional<std::int64_t> change_t = 200;
  double mu0 = 0.0;
  double mu1 = 2.0;
  double sigma = 1.0;
  std::uint64_t seed = 0;
};

std::vector<double> generate_series(const SeriesConfig& cfg);

struct DetectorConfig {
  DetectorKind kind = DetectorKind::kTCusum;
  double k = 0.5;
  double h = 8.0;
  double c = 2.75;
  double hazard = 1.0 / 250.0;
  int ar_max_order = 5;
  int training_m = 100;
  int short_run = 20;
  double short_mass = 0.8;
  double critical_value = 1.358;

  // {kind, k?, h?, c?, hazard?, ar_max_order?, training_m?, short_run?,
  //  short_mass?, critical_value?}; absent fields take the defaults above.
  static DetectorConfig from_json(std::string_view json_text);
  std::string to_json() const;  // every field, for run metadata
};

struct TrainingStats {
  std::int64_t m = 0;
  double mean = 0.0;
  double sd = 0.0;
};

// Sample mean and standard deviation (n - 1 denominator).
TrainingStats training_stats(std::span<const double> training);

struct DetectionOutput {
  bool alarm = false;
  double statistic = 0.0;
  double threshold = 0.0;
};

class OnlineDetector {
 public:
  virtual ~OnlineDetector() = default;

  virtual DetectorKind kind() const = 0;
  // Throws DetectorError on non-finite input.
  DetectionOutput update(double x);

  const DetectorConfig& config() const { return config_; }
  const TrainingStats& training() const { return training_; }
  // Number of monitoring samples consumed.
  std::int64_t t() const { return t_; }
  // Monitoring index (0-based) of the first alarm, if any.
  std::optional<std::int64_t> alarm_t() const {
    if (alarms_.empty()) return std::nullopt;
    return alarms_.front();
  }
  const std::vector<std::int64_t>& alarms() const { return alarms_; }

 protected:
  OnlineDetector(DetectorConfig config, TrainingStats training)
      : config_(config), training_(training) {}

  virtual DetectionOutput step(double x) = 0;

  DetectorConfig config_;
  TrainingStats training_;
  std::int64_t t_ = 0;
  std::vector<std::int64_t> alarms_;
};

// Validates the training window and builds the detector for config.kind.
// Online kinds need training.size() >= 20 (pcusum >= 50) and nonzero
// training variance.
std::unique_ptr<OnlineDetector> detector_init(const DetectorConfig& config,
                                              std::span<const double> training);

class CusumDetector final : public OnlineDetector {
 public:
  CusumDetector(DetectorConfig config, TrainingStats training);

  DetectorKind kind() const override { return DetectorKind::kTCusum; }
  double s_plus() const { return s_plus_; }
  double s_minus() const { return s_minus_; }

 private:
  DetectionOutput step(double x) override;

  double s_plus_ = 0.0;
  double s_minus_ = 0.0;
  bool latched_ = false;
};

class RatioCusumDetector final : public OnlineDetector {
 public:
  RatioCusumDetector(DetectorConfig config, std::span<const double> training);

  DetectorKind kind() const override { return DetectorKind::kRtCusum; }
  double training_sum() const { return training_sum_; }
  double normalizer() const { return normalizer_; }

 private:
  DetectionOutput step(double x) override;

  double training_sum_ = 0.0;
  double normalizer_ = 0.0;
  double monitor_sum_ = 0.0;
  bool latched_ = false;
};

struct ArFit {
  int order = 0;
  std::vector<double> coefficients;  // intercept, then lag 1..order
  double aic = 0.0;
  double residual_mean = 0.0;
  double residual_sd = 0.0;
};

// Least-squares AR fits for p in [0, max_order] on a common effective
// sample (the first max_order points are conditioning values), returning
// the one with the smallest AIC = n_eff * ln(RSS / n_eff) + 2 (p + 1).
// Ties go to the smaller order.
ArFit fit_ar_aic(std::span<const double> x, int max_order);

class ArCusumDetector final : public OnlineDetector {
 public:
  ArCusumDetector(DetectorConfig config, std::span<const double> training);

  DetectorKind kind() const override { return DetectorKind::kPCusum; }
  const ArFit& fit() const { return fit_; }
  double s_plus() const { return s_plus_; }
  double s_minus() const { return s_minus_; }

 private:
  DetectionOutput step(double x) override;

  ArFit fit_;
  std::vector<double> history_;  // last `order` observations, newest last
  double s_plus_ = 0.0;
  double s_minus_ = 0.0;
  bool latched_ = false;
};

class BocpDetector final : public OnlineDetector {
 public:
  BocpDetector(DetectorConfig config, TrainingStats training);

  DetectorKind kind() const override { return DetectorKind::kRBocp; }

  // P(run length = r), r = 0 .. size-1.
  std::vector<double> posterior() const;
  std::size_t support_size() const { return log_post_.size(); }
  std::int64_t map_run_length() const { return map_; }
  int restarts() const { return restarts_; }

 private:
  DetectionOutput step(double x) override;
  void restart();

  // Per-run-length state, stored oldest run first: index i holds run
  // length size-1-i, so a new r=0 entry is a push_back.
  std::vector<double> log_post_;
  std::vector<double> mu_;
  std::vector<double> kappa_;
  std::vector<double> alpha_;
  std::vector<double> beta_;
  std::vector<double> lgamma_ratio_;  // by run length
  double mu0_ = 0.0;
  double kappa0_ = 1.0;
  double alpha0_ = 1.0;
  double beta0_ = 1.0;
  std::int64_t map_ = 0;
  std::int64_t peak_ = 0;
  int restarts_ = 0;
};

struct OfflineResult {
  double statistic = 0.0;
  // Number of samples before the estimated change (0-based index of the
  // first post-change sample).
  std::int64_t change_estimate = 0;
  bool alarm = false;
};

// Requires n >= 2 and nonzero sample variance.
OfflineResult offline_cusum(std::span<const double> series,
                            double critical_value = 1.358);

struct GapMetrics {
  enum class Outcome { kDetected, kFalseAlarm };
  Outcome outcome = Outcome::kDetected;
  std::int64_t gap_points = 0;
  double gap_ms = 0.0;
};

// `sent_ms[i]` is the transmission time of sample i. The alarm emission time
// defaults to the transmission time of the alarming sample when not given.
GapMetrics compute_gap_metrics(std::int64_t alarm_t, std::int64_t change_t,
                               std::span<const double> sent_ms,
                               std::optional<double> alarm_emitted_ms = {});

}  // namespace edgebench

#endif  // EDGEBENCH_DETECTORS_H_
