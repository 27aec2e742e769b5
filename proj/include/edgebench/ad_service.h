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

// Detector server and client speaking HTTP/1.1 with JSON bodies:
//
//   POST   /v1/detectors               {kind, config}  -> {detector_id}
//   POST   /v1/detectors/{id}/samples  {t, value}
//            -> {alarm, statistic, processing_us, processing_ns, phase}
//   GET    /v1/detectors/{id}/metrics  -> resource and alarm summary
//   DELETE /v1/detectors/{id}
//
// Samples are indexed from 0 over the whole series. The first training_m
// samples train the detector (phase "training"); later ones are monitored.
// offline-cusum buffers everything and evaluates on GET .../metrics.

#ifndef EDGEBENCH_AD_SERVICE_H_
#define EDGEBENCH_AD_SERVICE_H_

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "edgebench/detectors.h"

namespace edgebench {

// Samples CPU utilisation (user + system time of this process over wall
// time) and resident memory every `period`. Readings cover the whole
// process, so they are an upper bound for the server's share.
class ResourceMonitor {
 public:
  struct Reading {
    double t_s = 0.0;  // since monitor start
    double cpu_percent = 0.0;
    double rss_mb = 0.0;
  };
  struct Summary {
    double cpu_percent = 0.0;
    double ram_mb = 0.0;
    int readings = 0;
  };

  explicit ResourceMonitor(
      std::chrono::milliseconds period = std::chrono::milliseconds(100));
  ~ResourceMonitor();
  ResourceMonitor(const ResourceMonitor&) = delete;
  ResourceMonitor& operator=(const ResourceMonitor&) = delete;

  double now_s() const;
  // Mean over readings taken in [from_s, to_s]; with none in range, a
  // direct measurement over the interval.
  Summary summarize(double from_s, double to_s) const;

  static double cpu_seconds();
  static double rss_mb();

 private:
  void loop(std::stop_token stop);

  std::chrono::milliseconds period_;
  std::chrono::steady_clock::time_point start_;
  mutable std::mutex mu_;
  std::vector<Reading> readings_;
  std::jthread thread_;
};

class AdServiceError : public std::runtime_error {
 public:
  AdServiceError(int status, const std::string& message)
      : std::runtime_error(message), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

class AdServer {
 public:
  AdServer();
  ~AdServer();
  AdServer(const AdServer&) = delete;
  AdServer& operator=(const AdServer&) = delete;

  // Binds 127.0.0.1 on an ephemeral port (0) or `port`, serves on a
  // background thread and returns the bound port.
  int start(int port = 0);
  void stop();
  int port() const { return port_; }
  std::size_t active_detectors() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

struct SampleReply {
  bool alarm = false;
  double statistic = 0.0;
  std::int64_t processing_us = 0;
  std::int64_t processing_ns = 0;
  bool training = false;
};

struct DetectorMetricsReply {
  std::string kind;
  std::int64_t samples = 0;
  std::optional<std::int64_t> alarm_t;  // global series index
  std::vector<std::int64_t> alarms;
  double mean_processing_ns = 0.0;
  double total_processing_ns = 0.0;
  double cpu_percent = 0.0;
  double ram_mb = 0.0;
  int resource_readings = 0;
  std::optional<OfflineResult> offline;
};

// One client connection (keep-alive). Not thread-safe; use one per thread.
class AdClient {
 public:
  AdClient(std::string host, int port, std::chrono::milliseconds timeout);
  ~AdClient();

  // Throws AdServiceError with the HTTP status (0 for transport errors).
  std::string create(const DetectorConfig& config);
  SampleReply post_sample(const std::string& id, std::int64_t t, double value);
  DetectorMetricsReply metrics(const std::string& id);
  void remove(const std::string& id);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace edgebench

#endif  // EDGEBENCH_AD_SERVICE_H_
