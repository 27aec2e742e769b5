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

#include "edgebench/ad_service.h"

#include <sys/resource.h>
#include <unistd.h>

#include <cmath>
#include <fstream>
#include <map>

#include <fmt/core.h>

#include "httplib.h"
#include "json.hpp"

namespace edgebench {
namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

std::int64_t elapsed_ns(Clock::time_point from) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - from)
      .count();
}

void reply_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, const std::string& msg) {
  reply_json(res, status, json{{"error", msg}});
}

}  // namespace

// --- ResourceMonitor ---------------------------------------------------------

ResourceMonitor::ResourceMonitor(std::chrono::milliseconds period)
    : period_(period), start_(Clock::now()) {
  thread_ = std::jthread([this](std::stop_token st) { loop(st); });
}

ResourceMonitor::~ResourceMonitor() {
  thread_.request_stop();
  if (thread_.joinable()) thread_.join();
}

double ResourceMonitor::now_s() const {
  return std::chrono::duration<double>(Clock::now() - start_).count();
}

double ResourceMonitor::cpu_seconds() {
  rusage ru{};
  getrusage(RUSAGE_SELF, &ru);
  const auto sec = [](const timeval& tv) {
    return static_cast<double>(tv.tv_sec) + static_cast<double>(tv.tv_usec) / 1e6;
  };
  return sec(ru.ru_utime) + sec(ru.ru_stime);
}

double ResourceMonitor::rss_mb() {
  std::ifstream statm("/proc/self/statm");
  long size = 0;
  long resident = 0;
  if (!(statm >> size >> resident)) return 0.0;
  return static_cast<double>(resident) *
         static_cast<double>(sysconf(_SC_PAGESIZE)) / 1e6;
}

void ResourceMonitor::loop(std::stop_token stop) {
  double last_cpu = cpu_seconds();
  double last_t = now_s();
  std::mutex wait_mu;
  std::condition_variable_any cv;
  while (!stop.stop_requested()) {
    {
      std::unique_lock lock(wait_mu);
      cv.wait_for(lock, stop, period_, [] { return false; });
    }
    if (stop.stop_requested()) break;
    const double cpu = cpu_seconds();
    const double t = now_s();
    Reading r;
    r.t_s = t;
    r.cpu_percent = t > last_t ? 100.0 * (cpu - last_cpu) / (t - last_t) : 0.0;
    r.rss_mb = rss_mb();
    last_cpu = cpu;
    last_t = t;
    std::lock_guard lock(mu_);
    readings_.push_back(r);
  }
}

ResourceMonitor::Summary ResourceMonitor::summarize(double from_s,
                                                    double to_s) const {
  Summary s;
  {
    std::lock_guard lock(mu_);
    for (const auto& r : readings_) {
      if (r.t_s < from_s || r.t_s > to_s) continue;
      s.cpu_percent += r.cpu_percent;
      s.ram_mb += r.rss_mb;
      ++s.readings;
    }
  }
  if (s.readings > 0) {
    s.cpu_percent /= s.readings;
    s.ram_mb /= s.readings;
  } else {
    s.ram_mb = rss_mb();
  }
  return s;
}

// --- server -------------------------------------------------------------------

namespace {

struct Session {
  std::mutex mu;
  DetectorConfig config;
  std::vector<double> buffer;  // training window, or the series for offline
  std::unique_ptr<OnlineDetector> detector;
  std::int64_t next_t = 0;
  double created_s = 0.0;
  double samples_ns = 0.0;
  std::int64_t processed = 0;
  std::optional<OfflineResult> offline;
  double offline_ns = 0.0;
};

}  // namespace

struct AdServer::Impl {
  httplib::Server server;
  std::thread thread;
  ResourceMonitor monitor;
  mutable std::mutex mu;
  std::map<std::string, std::shared_ptr<Session>> sessions;
  std::uint64_t next_id = 1;

  std::shared_ptr<Session> find(const std::string& id) {
    std::lock_guard lock(mu);
    const auto it = sessions.find(id);
    return it == sessions.end() ? nullptr : it->second;
  }

  void routes();
  void create(const httplib::Request& req, httplib::Response& res);
  void sample(const httplib::Request& req, httplib::Response& res);
  void metrics(const httplib::Request& req, httplib::Response& res);
  void remove(const httplib::Request& req, httplib::Response& res);
};

void AdServer::Impl::routes() {
  server.Post("/v1/detectors", [this](const auto& req, auto& res) { create(req, res); });
  server.Post(R"(/v1/detectors/([^/]+)/samples)",
              [this](const auto& req, auto& res) { sample(req, res); });
  server.Get(R"(/v1/detectors/([^/]+)/metrics)",
             [this](const auto& req, auto& res) { metrics(req, res); });
  server.Delete(R"(/v1/detectors/([^/]+))",
                [this](const auto& req, auto& res) { remove(req, res); });
}

void AdServer::Impl::create(const httplib::Request& req,
                            httplib::Response& res) {
  DetectorConfig cfg;
  try {
    json body = json::parse(req.body);
    json merged = body.value("config", json::object());
    merged["kind"] = body.at("kind");
    cfg = DetectorConfig::from_json(merged.dump());
  } catch (const std::exception& e) {
    reply_error(res, 400, e.what());
    return;
  }
  auto s = std::make_shared<Session>();
  s->config = cfg;
  s->created_s = monitor.now_s();
  std::string id;
  {
    std::lock_guard lock(mu);
    id = fmt::format("d{}", next_id++);
    sessions[id] = s;
  }
  reply_json(res, 201, json{{"detector_id", id}, {"config", json::parse(cfg.to_json())}});
}

void AdServer::Impl::sample(const httplib::Request& req,
                            httplib::Response& res) {
  const auto s = find(req.matches[1]);
  if (!s) {
    reply_error(res, 404, "unknown detector");
    return;
  }
  std::int64_t t = 0;
  double value = 0.0;
  try {
    const json body = json::parse(req.body);
    t = body.at("t").get<std::int64_t>();
    value = body.at("value").get<double>();
  } catch (const std::exception& e) {
    reply_error(res, 400, e.what());
    return;
  }
  std::lock_guard lock(s->mu);
  if (t != s->next_t) {
    reply_error(res, 409, fmt::format("expected sample t={}, got {}", s->next_t, t));
    return;
  }
  const auto start = Clock::now();
  DetectionOutput out;
  bool training = false;
  try {
    if (!std::isfinite(value)) throw DetectorError("non-finite sample");
    if (!is_online(s->config.kind)) {
      s->buffer.push_back(value);
      training = true;
    } else if (!s->detector) {
      s->buffer.push_back(value);
      training = true;
      if (static_cast<int>(s->buffer.size()) >= s->config.training_m) {
        s->detector = detector_init(s->config, s->buffer);
        s->buffer.clear();
      }
    } else {
      out = s->detector->update(value);
    }
  } catch (const DetectorError& e) {
    reply_error(res, 422, e.what());
    return;
  }
  const std::int64_t ns = elapsed_ns(start);
  s->samples_ns += static_cast<double>(ns);
  ++s->processed;
  ++s->next_t;
  reply_json(res, 200,
             json{{"alarm", out.alarm},
                  {"statistic", out.statistic},
                  {"threshold", out.threshold},
                  {"processing_us", ns / 1000},
                  {"processing_ns", ns},
                  {"phase", training ? "training" : "monitoring"}});
}

void AdServer::Impl::metrics(const httplib::Request& req,
                             httplib::Response& res) {
  const auto s = find(req.matches[1]);
  if (!s) {
    reply_error(res, 404, "unknown detector");
    return;
  }
  std::lock_guard lock(s->mu);
  if (!is_online(s->config.kind) && !s->offline) {
    const auto start = Clock::now();
    try {
      s->offline = offline_cusum(s->buffer, s->config.critical_value);
    } catch (const DetectorError& e) {
      reply_error(res, 422, e.what());
      return;
    }
    s->offline_ns = static_cast<double>(elapsed_ns(start));
  }
  const auto usage = monitor.summarize(s->created_s, monitor.now_s());
  json body;
  body["kind"] = std::string(to_string(s->config.kind));
  body["samples"] = s->next_t;
  json alarms = json::array();
  if (s->detector) {
    const std::int64_t offset = s->config.training_m;
    for (const auto a : s->detector->alarms()) alarms.push_back(a + offset);
  }
  if (s->offline && s->offline->alarm) alarms.push_back(s->offline->change_estimate);
  body["alarms"] = alarms;
  body["alarm_t"] = alarms.empty() ? json(nullptr) : alarms.front();
  body["mean_processing_ns"] =
      s->processed > 0 ? s->samples_ns / static_cast<double>(s->processed) : 0.0;
  body["total_processing_ns"] = s->samples_ns + s->offline_ns;
  body["cpu_percent"] = usage.cpu_percent;
  body["ram_mb"] = usage.ram_mb;
  body["resource_readings"] = usage.readings;
  if (s->offline) {
    body["offline"] = {{"statistic", s->offline->statistic},
                       {"change_estimate", s->offline->change_estimate},
                       {"alarm", s->offline->alarm}};
  }
  reply_json(res, 200, body);
}

void AdServer::Impl::remove(const httplib::Request& req,
                            httplib::Response& res) {
  std::lock_guard lock(mu);
  if (sessions.erase(req.matches[1]) == 0) {
    reply_error(res, 404, "unknown detector");
    return;
  }
  res.status = 204;
}

AdServer::AdServer() : impl_(std::make_unique<Impl>()) { impl_->routes(); }

AdServer::~AdServer() { stop(); }

int AdServer::start(int port) {
  if (impl_->thread.joinable()) return port_;
  impl_->server.set_tcp_nodelay(true);
  impl_->server.set_keep_alive_max_count(1 << 20);
  if (port == 0) {
    port_ = impl_->server.bind_to_any_port("127.0.0.1");
    if (port_ < 0) throw AdServiceError(0, "cannot bind detector server");
  } else {
    if (!impl_->server.bind_to_port("127.0.0.1", port)) {
      throw AdServiceError(0, fmt::format("cannot bind port {}", port));
    }
    port_ = port;
  }
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port_;
}

void AdServer::stop() {
  if (!impl_ || !impl_->thread.joinable()) return;
  impl_->server.stop();
  impl_->thread.join();
}

std::size_t AdServer::active_detectors() const {
  std::lock_guard lock(impl_->mu);
  return impl_->sessions.size();
}

// --- client ---------------------------------------------------------------------

struct AdClient::Impl {
  httplib::Client cli;
  Impl(const std::string& host, int port) : cli(host, port) {}

  json call(const httplib::Result& r, std::string_view what) {
    if (!r) {
      throw AdServiceError(
          0, fmt::format("{}: {}", what, httplib::to_string(r.error())));
    }
    json body;
    if (!r->body.empty()) {
      try {
        body = json::parse(r->body);
      } catch (const json::exception&) {
        throw AdServiceError(r->status, fmt::format("{}: malformed reply", what));
      }
    }
    if (r->status >= 300) {
      throw AdServiceError(r->status,
                           fmt::format("{}: HTTP {}: {}", what, r->status,
                                       body.value("error", std::string())));
    }
    return body;
  }
};

AdClient::AdClient(std::string host, int port, std::chrono::milliseconds timeout)
    : impl_(std::make_unique<Impl>(host, port)) {
  impl_->cli.set_keep_alive(true);
  impl_->cli.set_tcp_nodelay(true);
  impl_->cli.set_connection_timeout(timeout);
  impl_->cli.set_read_timeout(timeout);
  impl_->cli.set_write_timeout(timeout);
}

AdClient::~AdClient() = default;

std::string AdClient::create(const DetectorConfig& config) {
  json cfg = json::parse(config.to_json());
  const std::string kind = cfg["kind"];
  cfg.erase("kind");
  const json body{{"kind", kind}, {"config", cfg}};
  const json r = impl_->call(
      impl_->cli.Post("/v1/detectors", body.dump(), "application/json"),
      "create detector");
  return r.at("detector_id").get<std::string>();
}

SampleReply AdClient::post_sample(const std::string& id, std::int64_t t,
                                  double value) {
  const json body{{"t", t}, {"value", value}};
  const json r = impl_->call(
      impl_->cli.Post(fmt::format("/v1/detectors/{}/samples", id), body.dump(),
                      "application/json"),
      "post sample");
  SampleReply out;
  out.alarm = r.at("alarm").get<bool>();
  out.statistic = r.at("statistic").get<double>();
  out.processing_us = r.at("processing_us").get<std::int64_t>();
  out.processing_ns = r.value("processing_ns", out.processing_us * 1000);
  out.training = r.value("phase", std::string()) == "training";
  return out;
}

DetectorMetricsReply AdClient::metrics(const std::string& id) {
  const json r = impl_->call(
      impl_->cli.Get(fmt::format("/v1/detectors/{}/metrics", id)), "metrics");
  DetectorMetricsReply m;
  m.kind = r.at("kind").get<std::string>();
  m.samples = r.at("samples").get<std::int64_t>();
  if (!r.at("alarm_t").is_null()) m.alarm_t = r.at("alarm_t").get<std::int64_t>();
  m.alarms = r.at("alarms").get<std::vector<std::int64_t>>();
  m.mean_processing_ns = r.at("mean_processing_ns").get<double>();
  m.total_processing_ns = r.at("total_processing_ns").get<double>();
  m.cpu_percent = r.at("cpu_percent").get<double>();
  m.ram_mb = r.at("ram_mb").get<double>();
  m.resource_readings = r.at("resource_readings").get<int>();
  if (r.contains("offline")) {
    OfflineResult o;
    o.statistic = r["offline"].at("statistic").get<double>();
    o.change_estimate = r["offline"].at("change_estimate").get<std::int64_t>();
    o.alarm = r["offline"].at("alarm").get<bool>();
    m.offline = o;
  }
  return m;
}

void AdClient::remove(const std::string& id) {
  impl_->call(impl_->cli.Delete(fmt::format("/v1/detectors/{}", id)),
              "delete detector");
}

}  // namespace edgebench
