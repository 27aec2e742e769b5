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

// Experiment controllers run a specific experiment against a ready cluster
// and return metric samples. Two are built in: the CNI plugin benchmark
// ("cni-plugins") and the anomaly-detection harness ("anomaly-detection").

#ifndef EDGEBENCH_CONTROLLERS_H_
#define EDGEBENCH_CONTROLLERS_H_

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <stop_token>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "edgebench/compat.h"
#include "edgebench/detectors.h"
#include "edgebench/resource.h"

namespace edgebench {

class ControllerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MetricSample {
  std::string metric;
  std::string condition;  // "idle", "p2p-tcp", ... or "mean-shift" / "null"
  std::string input;      // e.g. "k8s-flannel" or "tcusum"
  std::int64_t replication = 0;
  std::string node;       // optional
  double value = 0.0;
  std::string unit;

  friend bool operator==(const MetricSample&, const MetricSample&) = default;
  friend auto operator<=>(const MetricSample&, const MetricSample&) = default;
};

// A cell that produced no sample, or a replication excluded from a metric.
struct SampleFailure {
  std::string metric;  // empty: every metric of the cell
  std::string condition;
  std::string input;
  std::int64_t replication = 0;
  std::string reason;

  friend bool operator==(const SampleFailure&, const SampleFailure&) = default;
};

struct ControllerRequest {
  std::string controller_id;
  std::vector<std::string> inputs;
  std::vector<std::string> metrics;
  std::int64_t replications = 1;
  ClusterReady cluster;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> options;
};

struct ControllerResult {
  std::vector<MetricSample> samples;
  std::vector<SampleFailure> failures;
  // Free-form run metadata (probe kind, detector configs, ...).
  std::map<std::string, std::string> metadata;
};

class Controller {
 public:
  virtual ~Controller() = default;

  virtual std::string id() const = 0;
  // Throws ControllerError for request-level problems (bad input or
  // option, harness start-up failure, cancellation). Per-cell problems go to
  // ControllerResult::failures.
  virtual ControllerResult run(const ControllerRequest& req,
                               std::stop_token stop) = 0;
};

class ControllerRegistry {
 public:
  // Both built-in controllers with their default probes.
  static ControllerRegistry builtin();

  void add(std::unique_ptr<Controller> c);
  // Throws ControllerError listing the available ids.
  Controller& lookup(std::string_view id) const;
  Controller* find(std::string_view id) const;
  std::vector<std::string> ids() const;

 private:
  std::map<std::string, std::unique_ptr<Controller>, std::less<>> controllers_;
};

// Option lookup over `key=value` pairs; throws ControllerError on keys not
// in `known` and on unparsable numbers.
class Options {
 public:
  Options(const std::vector<std::pair<std::string, std::string>>& pairs,
          std::vector<std::string_view> known);

  std::optional<std::string> get(std::string_view key) const;
  std::string get_or(std::string_view key, std::string fallback) const;
  double number(std::string_view key, double fallback) const;
  std::int64_t integer(std::string_view key, std::int64_t fallback) const;
  bool flag(std::string_view key, bool fallback) const;

 private:
  std::map<std::string, std::string, std::less<>> values_;
};

// SplitMix64 finalizer over a running hash; used for per-cell seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::string_view part);
std::uint64_t mix_seed(std::uint64_t seed, std::int64_t part);

// --- CNI benchmark ---------------------------------------------------------

// Benchmark conditions in report order. The idle condition carries the
// resource metrics only.
const std::vector<std::string>& cni_conditions();
bool cni_metric_in_condition(std::string_view metric, std::string_view condition);
std::string cni_metric_unit(std::string_view metric);

struct ProbeCell {
  CniTarget target;
  std::string input;      // as written in the descriptor
  std::string condition;  // "p2p-tcp", ...
  std::string metric;
  std::int64_t replication = 0;
  std::uint64_t seed = 0;
};

class ProbeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NetworkProbe {
 public:
  virtual ~NetworkProbe() = default;
  virtual std::string id() const = 0;
  virtual bool synthetic() const = 0;
  // Throws ProbeError when the cell cannot be measured.
  virtual double measure(const ProbeCell& cell, const ClusterReady& cluster) = 0;
};

// Seeded generative model over a shipped per-(distro, fabric) profile table.
// The numbers are shaped like small-cluster measurements, not measurements.
class SyntheticProbe final : public NetworkProbe {
 public:
  std::string id() const override { return "synthetic"; }
  bool synthetic() const override { return true; }
  double measure(const ProbeCell& cell, const ClusterReady& cluster) override;

  struct Profile {
    double tcp_mbps;
    double udp_mbps;
    double cpu_percent;
    double ram_mb;
    double latency_ms;
  };
  static Profile profile(const CniTarget& target);
};

// Runs a command template per cell; the command must print `value=<float>`.
// Placeholders: {input} {distro} {fabric} {condition} {protocol} {metric}
// {replication} {seed} {master} {client} {server}.
class ExternalProbe final : public NetworkProbe {
 public:
  ExternalProbe(std::string command_template, std::chrono::seconds timeout);
  std::string id() const override { return "external"; }
  bool synthetic() const override { return false; }
  double measure(const ProbeCell& cell, const ClusterReady& cluster) override;

 private:
  std::string template_;
  std::chrono::seconds timeout_;
};

// Options: probe=synthetic|external, probe_cmd=<template>,
// probe_timeout_s=<int>.
class CniBenchmarkController final : public Controller {
 public:
  std::string id() const override { return std::string(kCniControllerId); }
  ControllerResult run(const ControllerRequest& req,
                       std::stop_token stop) override;

  // Uses `probe` instead of the option-selected one (tests).
  void set_probe(std::shared_ptr<NetworkProbe> probe) { probe_ = std::move(probe); }

 private:
  std::shared_ptr<NetworkProbe> probe_;
};

// --- anomaly detection -----------------------------------------------------

std::string ad_metric_unit(std::string_view metric);

struct AdHarnessConfig {
  SeriesConfig series;        // change_t is a global series index
  int clients = 1;
  double interval_ms = 10.0;  // pacing between transmissions
  bool stop_on_alarm = true;  // online kinds stop streaming after an alarm
  double request_timeout_s = 10.0;
  DetectorConfig detector;    // kind is overridden per input

  // Options: n, change_t, no_change, mu0, mu1, sigma, clients, interval_ms,
  // stream_after_alarm, timeout_s, k, h, c, hazard, ar_max_order,
  // training_m, short_run, short_mass, critical_value.
  static AdHarnessConfig from_options(const Options& opts);
  static std::vector<std::string_view> option_keys();
};

// Spins up one in-process detector server on 127.0.0.1 and `clients`
// client threads per replication. Series seeds derive from (seed,
// replication, client) only, so every detector sees the same streams.
class AnomalyDetectionController final : public Controller {
 public:
  std::string id() const override { return std::string(kAdControllerId); }
  ControllerResult run(const ControllerRequest& req,
                       std::stop_token stop) override;
};

}  // namespace edgebench

#endif  // EDGEBENCH_CONTROLLERS_H_
