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

#include "edgebench/detectors.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <Eigen/Dense>
#include <fmt/core.h>

#include "json.hpp"

namespace edgebench {
namespace {

constexpr int kMinTraining = 20;
constexpr int kMinArTraining = 50;

double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (const double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

std::string_view to_string(DetectorKind k) {
  switch (k) {
    case DetectorKind::kTCusum:
      return "tcusum";
    case DetectorKind::kRtCusum:
      return "rt-cusum";
    case DetectorKind::kPCusum:
      return "pcusum";
    case DetectorKind::kRBocp:
      return "rbocp";
    case DetectorKind::kOfflineCusum:
      return "offline-cusum";
  }
  return "tcusum";
}

std::optional<DetectorKind> parse_detector_kind(std::string_view s) {
  for (const auto k : all_detector_kinds()) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

const std::vector<DetectorKind>& all_detector_kinds() {
  static const std::vector<DetectorKind> kAll = {
      DetectorKind::kTCusum, DetectorKind::kRtCusum, DetectorKind::kPCusum,
      DetectorKind::kRBocp, DetectorKind::kOfflineCusum};
  return kAll;
}

bool is_online(DetectorKind k) { return k != DetectorKind::kOfflineCusum; }

std::vector<double> generate_series(const SeriesConfig& cfg) {
  if (cfg.n < 0) throw DetectorError("series length must be nonnegative");
  if (!(cfg.sigma > 0.0)) throw DetectorError("sigma must be positive");
  if (cfg.change_t && (*cfg.change_t < 1 || *cfg.change_t >= cfg.n)) {
    throw DetectorError(
        fmt::format("change_t {} outside [1, {})", *cfg.change_t, cfg.n));
  }
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> out(static_cast<std::size_t>(cfg.n));
  for (std::int64_t t = 0; t < cfg.n; ++t) {
    const bool after = cfg.change_t && t >= *cfg.change_t;
    out[static_cast<std::size_t>(t)] =
        (after ? cfg.mu1 : cfg.mu0) + cfg.sigma * z(rng);
  }
  return out;
}

DetectorConfig DetectorConfig::from_json(std::string_view json_text) {
  const auto j = nlohmann::json::parse(json_text);
  DetectorConfig c;
  const std::string kind = j.at("kind").get<std::string>();
  const auto parsed = parse_detector_kind(kind);
  if (!parsed) throw DetectorError(fmt::format("unknown detector '{}'", kind));
  c.kind = *parsed;
  c.k = j.value("k", c.k);
  c.h = j.value("h", c.h);
  c.c = j.value("c", c.c);
  c.hazard = j.value("hazard", c.hazard);
  c.ar_max_order = j.value("ar_max_order", c.ar_max_order);
  c.training_m = j.value("training_m", c.training_m);
  c.short_run = j.value("short_run", c.short_run);
  c.short_mass = j.value("short_mass", c.short_mass);
  c.critical_value = j.value("critical_value", c.critical_value);
  if (!(c.hazard > 0.0 && c.hazard < 1.0)) {
    throw DetectorError("hazard must lie in (0, 1)");
  }
  if (c.ar_max_order < 0 || c.ar_max_order > 20) {
    throw DetectorError("ar_max_order must lie in [0, 20]");
  }
  if (c.training_m < 0) throw DetectorError("training_m must be nonnegative");
  return c;
}

std::string DetectorConfig::to_json() const {
  nlohmann::ordered_json j;
  j["kind"] = std::string(to_string(kind));
  j["k"] = k;
  j["h"] = h;
  j["c"] = c;
  j["hazard"] = hazard;
  j["ar_max_order"] = ar_max_order;
  j["training_m"] = training_m;
  j["short_run"] = short_run;
  j["short_mass"] = short_mass;
  j["critical_value"] = critical_value;
  return j.dump();
}

TrainingStats training_stats(std::span<const double> training) {
  TrainingStats s;
  s.m = static_cast<std::int64_t>(training.size());
  if (training.size() < 2) return s;
  s.mean = std::accumulate(training.begin(), training.end(), 0.0) /
           static_cast<double>(training.size());
  double ss = 0.0;
  for (const double x : training) ss += (x - s.mean) * (x - s.mean);
  s.sd = std::sqrt(ss / static_cast<double>(training.size() - 1));
  return s;
}

DetectionOutput OnlineDetector::update(double x) {
  if (!std::isfinite(x)) throw DetectorError("non-finite sample");
  const DetectionOutput out = step(x);
  ++t_;
  return out;
}

std::unique_ptr<OnlineDetector> detector_init(
    const DetectorConfig& config, std::span<const double> training) {
  if (!is_online(config.kind)) {
    throw DetectorError("offline-cusum is a batch method; use offline_cusum()");
  }
  const int min_m =
      config.kind == DetectorKind::kPCusum ? kMinArTraining : kMinTraining;
  if (static_cast<int>(training.size()) < min_m) {
    throw DetectorError(fmt::format("{} needs at least {} training samples, "
                                    "got {}",
                                    to_string(config.kind), min_m,
                                    training.size()));
  }
  for (const double x : training) {
    if (!std::isfinite(x)) throw DetectorError("non-finite training sample");
  }
  const TrainingStats stats = training_stats(training);
  if (!(stats.sd > 0.0)) throw DetectorError("zero training variance");
  switch (config.kind) {
    case DetectorKind::kTCusum:
      return std::make_unique<CusumDetector>(config, stats);
    case DetectorKind::kRtCusum:
      return std::make_unique<RatioCusumDetector>(config, training);
    case DetectorKind::kPCusum:
      return std::make_unique<ArCusumDetector>(config, training);
    case DetectorKind::kRBocp:
      return std::make_unique<BocpDetector>(config, stats);
    case DetectorKind::kOfflineCusum:
      break;
  }
  throw DetectorError("unsupported detector kind");
}

// --- tcusum ----------------------------------------------------------------

CusumDetector::CusumDetector(DetectorConfig config, TrainingStats training)
    : OnlineDetector(config, training) {}

DetectionOutput CusumDetector::step(double x) {
  const double mu = training_.mean;
  const double sd = training_.sd;
  s_plus_ = std::max(0.0, s_plus_ + (x - mu - config_.k * sd));
  s_minus_ = std::max(0.0, s_minus_ + (mu - x - config_.k * sd));
  const double stat = std::max(s_plus_, s_minus_) / sd;
  if (!latched_ && stat > config_.h) {
    latched_ = true;
    alarms_.push_back(t_);
  }
  return {latched_, stat, config_.h};
}

// --- rt-cusum ----------------------------------------------------------------

RatioCusumDetector::RatioCusumDetector(DetectorConfig config,
                                       std::span<const double> training)
    : OnlineDetector(config, training_stats(training)) {
  double partial = 0.0;
  for (const double x : training) {
    training_sum_ += x;
    partial += x - training_.mean;
    normalizer_ = std::max(normalizer_, std::abs(partial));
  }
  if (!(normalizer_ > 0.0)) throw DetectorError("zero training variance");
}

DetectionOutput RatioCusumDetector::step(double x) {
  monitor_sum_ += x;
  const double m = static_cast<double>(training_.m);
  const double t = static_cast<double>(t_ + 1);
  const double gamma = std::abs(monitor_sum_ - (t / m) * training_sum_);
  const double stat = gamma / (normalizer_ * (1.0 + t / m));
  if (!latched_ && stat > config_.c) {
    latched_ = true;
    alarms_.push_back(t_);
  }
  return {latched_, stat, config_.c};
}

// --- pcusum ------------------------------------------------------------------

ArFit fit_ar_aic(std::span<const double> x, int max_order) {
  const int n = static_cast<int>(x.size());
  const int n_eff = n - max_order;
  if (max_order < 0 || n_eff <= 2 * (max_order + 1)) {
    throw DetectorError(fmt::format("{} samples are too few for AR order {}",
                                    n, max_order));
  }
  ArFit best;
  best.aic = std::numeric_limits<double>::infinity();
  Eigen::VectorXd y(n_eff);
  for (int r = 0; r < n_eff; ++r) y(r) = x[static_cast<std::size_t>(max_order + r)];

  for (int p = 0; p <= max_order; ++p) {
    Eigen::MatrixXd design(n_eff, p + 1);
    for (int r = 0; r < n_eff; ++r) {
      const int t = max_order + r;
      design(r, 0) = 1.0;
      for (int lag = 1; lag <= p; ++lag) {
        design(r, lag) = x[static_cast<std::size_t>(t - lag)];
      }
    }
    const Eigen::VectorXd beta = design.colPivHouseholderQr().solve(y);
    const Eigen::VectorXd resid = y - design * beta;
    const double rss = resid.squaredNorm();
    if (!(rss > 0.0)) continue;
    const double aic = n_eff * std::log(rss / n_eff) + 2.0 * (p + 1);
    if (aic < best.aic) {
      best.order = p;
      best.aic = aic;
      best.coefficients.assign(beta.data(), beta.data() + beta.size());
      best.residual_mean = resid.mean();
      const double centered =
          (resid.array() - best.residual_mean).square().sum();
      best.residual_sd = std::sqrt(centered / (n_eff - 1));
    }
  }
  if (!std::isfinite(best.aic)) throw DetectorError("zero training variance");
  return best;
}

ArCusumDetector::ArCusumDetector(DetectorConfig config,
                                 std::span<const double> training)
    : OnlineDetector(config, training_stats(training)),
      fit_(fit_ar_aic(training, config.ar_max_order)) {
  if (!(fit_.residual_sd > 0.0)) throw DetectorError("zero residual variance");
  history_.assign(training.end() - fit_.order, training.end());
}

DetectionOutput ArCusumDetector::step(double x) {
  double pred = fit_.coefficients[0];
  const int p = fit_.order;
  for (int lag = 1; lag <= p; ++lag) {
    pred += fit_.coefficients[static_cast<std::size_t>(lag)] *
            history_[history_.size() - static_cast<std::size_t>(lag)];
  }
  const double e = x - pred;
  const double mu = fit_.residual_mean;
  const double sd = fit_.residual_sd;
  s_plus_ = std::max(0.0, s_plus_ + (e - mu - config_.k * sd));
  s_minus_ = std::max(0.0, s_minus_ + (mu - e - config_.k * sd));
  if (p > 0) {
    history_.erase(history_.begin());
    history_.push_back(x);
  }
  const double stat = std::max(s_plus_, s_minus_) / sd;
  if (!latched_ && stat > config_.h) {
    latched_ = true;
    alarms_.push_back(t_);
  }
  return {latched_, stat, config_.h};
}

// --- rbocp -------------------------------------------------------------------

BocpDetector::BocpDetector(DetectorConfig config, TrainingStats training)
    : OnlineDetector(config, training) {
  if (!(config_.hazard > 0.0 && config_.hazard < 1.0)) {
    throw DetectorError("hazard must lie in (0, 1)");
  }
  // The training window is summarized as a Normal-Gamma prior whose
  // precision has the strength of m/2 pseudo-observations.
  mu0_ = training.mean;
  kappa0_ = 1.0;
  alpha0_ = std::max(1.0, static_cast<double>(training.m) / 2.0);
  beta0_ = alpha0_ * training.sd * training.sd;
  restart();
  restarts_ = 0;
}

void BocpDetector::restart() {
  log_post_.assign(1, 0.0);
  mu_.assign(1, mu0_);
  kappa_.assign(1, kappa0_);
  alpha_.assign(1, alpha0_);
  beta_.assign(1, beta0_);
  map_ = 0;
  peak_ = 0;
  ++restarts_;
}

std::vector<double> BocpDetector::posterior() const {
  std::vector<double> p(log_post_.size());
  for (std::size_t i = 0; i < log_post_.size(); ++i) {
    p[log_post_.size() - 1 - i] = std::exp(log_post_[i]);
  }
  return p;
}

DetectionOutput BocpDetector::step(double x) {
  const std::size_t n = log_post_.size();
  while (lgamma_ratio_.size() < n) {
    const double a = alpha0_ + 0.5 * static_cast<double>(lgamma_ratio_.size());
    lgamma_ratio_.push_back(std::lgamma(a + 0.5) - std::lgamma(a));
  }

  const double log_h = std::log(config_.hazard);
  const double log_1mh = std::log1p(-config_.hazard);
  std::vector<double> joint(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = n - 1 - i;
    const double nu = 2.0 * alpha_[i];
    const double scale2 = beta_[i] * (kappa_[i] + 1.0) / (alpha_[i] * kappa_[i]);
    const double d = x - mu_[i];
    const double log_pred = lgamma_ratio_[r] -
                            0.5 * std::log(nu * M_PI * scale2) -
                            (alpha_[i] + 0.5) * std::log1p(d * d / (nu * scale2));
    joint[i] = log_post_[i] + log_pred;
  }
  const double log_cp = log_h + log_sum_exp(joint);
  for (std::size_t i = 0; i < n; ++i) log_post_[i] = joint[i] + log_1mh;
  log_post_.push_back(log_cp);
  const double norm = log_sum_exp(log_post_);
  for (double& v : log_post_) v -= norm;

  for (std::size_t i = 0; i < n; ++i) {
    const double d = x - mu_[i];
    beta_[i] += kappa_[i] * d * d / (2.0 * (kappa_[i] + 1.0));
    mu_[i] = (kappa_[i] * mu_[i] + x) / (kappa_[i] + 1.0);
    kappa_[i] += 1.0;
    alpha_[i] += 0.5;
  }
  mu_.push_back(mu0_);
  kappa_.push_back(kappa0_);
  alpha_.push_back(alpha0_);
  beta_.push_back(beta0_);

  const std::size_t size = log_post_.size();
  std::size_t best = size - 1;
  double short_mass = 0.0;
  const auto window = static_cast<std::size_t>(std::max(1, config_.short_run));
  for (std::size_t i = 0; i < size; ++i) {
    if (log_post_[i] > log_post_[best]) best = i;
    if (size - 1 - i < window) short_mass += std::exp(log_post_[i]);
  }
  map_ = static_cast<std::int64_t>(size - 1 - best);

  const bool alarm = peak_ >= config_.short_run &&
                     static_cast<double>(map_) < 0.5 * static_cast<double>(peak_) &&
                     short_mass > config_.short_mass;
  if (alarm) {
    alarms_.push_back(t_);
    restart();
  } else {
    peak_ = std::max(peak_, map_);
  }
  return {alarm, short_mass, config_.short_mass};
}

// --- offline -----------------------------------------------------------------

OfflineResult offline_cusum(std::span<const double> series,
                            double critical_value) {
  const std::size_t n = series.size();
  if (n < 2) throw DetectorError("offline CUSUM needs at least 2 samples");
  const TrainingStats s = training_stats(series);
  if (!(s.sd > 0.0)) throw DetectorError("zero variance");
  OfflineResult r;
  double partial = 0.0;
  double best = -1.0;
  for (std::size_t t = 1; t < n; ++t) {
    partial += series[t - 1] - s.mean;
    if (std::abs(partial) > best) {
      best = std::abs(partial);
      r.change_estimate = static_cast<std::int64_t>(t);
    }
  }
  r.statistic = best / (s.sd * std::sqrt(static_cast<double>(n)));
  r.alarm = r.statistic > critical_value;
  return r;
}

GapMetrics compute_gap_metrics(std::int64_t alarm_t, std::int64_t change_t,
                               std::span<const double> sent_ms,
                               std::optional<double> alarm_emitted_ms) {
  const auto in_range = [&](std::int64_t i) {
    return i >= 0 && static_cast<std::size_t>(i) < sent_ms.size();
  };
  if (!in_range(alarm_t) || !in_range(change_t)) {
    throw std::out_of_range("alarm or change index outside the timeline");
  }
  GapMetrics g;
  g.gap_points = alarm_t - change_t;
  g.outcome = g.gap_points < 0 ? GapMetrics::Outcome::kFalseAlarm
                               : GapMetrics::Outcome::kDetected;
  const double emitted =
      alarm_emitted_ms.value_or(sent_ms[static_cast<std::size_t>(alarm_t)]);
  g.gap_ms = emitted - sent_ms[static_cast<std::size_t>(change_t)];
  return g;
}

}  // namespace edgebench
