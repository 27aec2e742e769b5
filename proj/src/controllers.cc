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

#include "edgebench/controllers.h"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <random>
#include <sstream>
#include <thread>

#include <fmt/core.h>
#include <fmt/ranges.h>

#include "edgebench/ad_service.h"
#include "edgebench/process.h"

namespace edgebench {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::string> metrics_or_all(const std::vector<std::string>& requested,
                                        std::string_view controller_id) {
  const auto catalog = CompatibilityCatalog::builtin();
  const auto* info = catalog.find_controller(controller_id);
  if (requested.empty()) return info->metrics;
  for (const auto& m : requested) {
    if (std::find(info->metrics.begin(), info->metrics.end(), m) ==
        info->metrics.end()) {
      throw ControllerError(fmt::format("controller {} does not provide metric '{}'",
                                        controller_id, m));
    }
  }
  return requested;
}

void check_request(const ControllerRequest& req) {
  if (req.inputs.empty()) throw ControllerError("no experiment inputs");
  if (req.replications < 1) {
    throw ControllerError(
        fmt::format("replications must be >= 1, found {}", req.replications));
  }
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::string_view part) {
  return splitmix64(seed ^ splitmix64(fnv1a(part)));
}

std::uint64_t mix_seed(std::uint64_t seed, std::int64_t part) {
  return splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(part) +
                                      0x632be59bd9b4e019ULL));
}

// --- registry and options ------------------------------------------------------

ControllerRegistry ControllerRegistry::builtin() {
  ControllerRegistry r;
  r.add(std::make_unique<CniBenchmarkController>());
  r.add(std::make_unique<AnomalyDetectionController>());
  return r;
}

void ControllerRegistry::add(std::unique_ptr<Controller> c) {
  const std::string id = c->id();
  controllers_[id] = std::move(c);
}

Controller* ControllerRegistry::find(std::string_view id) const {
  const auto it = controllers_.find(id);
  return it == controllers_.end() ? nullptr : it->second.get();
}

Controller& ControllerRegistry::lookup(std::string_view id) const {
  Controller* c = find(id);
  if (c == nullptr) {
    throw ControllerError(fmt::format("unknown experiment controller '{}' "
                                      "(available: {})",
                                      id, fmt::join(ids(), ", ")));
  }
  return *c;
}

std::vector<std::string> ControllerRegistry::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, c] : controllers_) out.push_back(id);
  return out;
}

Options::Options(const std::vector<std::pair<std::string, std::string>>& pairs,
                 std::vector<std::string_view> known) {
  for (const auto& [k, v] : pairs) {
    if (std::find(known.begin(), known.end(), k) == known.end()) {
      throw ControllerError(fmt::format("unknown option '{}' (known: {})", k,
                                        fmt::join(known, ", ")));
    }
    values_[k] = v;
  }
}

std::optional<std::string> Options::get(std::string_view key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string Options::get_or(std::string_view key, std::string fallback) const {
  return get(key).value_or(std::move(fallback));
}

double Options::number(std::string_view key, double fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || p != v->data() + v->size() || !std::isfinite(out)) {
    throw ControllerError(fmt::format("option {}: '{}' is not a number", key, *v));
  }
  return out;
}

std::int64_t Options::integer(std::string_view key, std::int64_t fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  std::int64_t out = 0;
  const auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || p != v->data() + v->size()) {
    throw ControllerError(fmt::format("option {}: '{}' is not an integer", key, *v));
  }
  return out;
}

bool Options::flag(std::string_view key, bool fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw ControllerError(fmt::format("option {}: '{}' is not a boolean", key, *v));
}

// --- CNI benchmark -----------------------------------------------------------------

const std::vector<std::string>& cni_conditions() {
  static const std::vector<std::string> kConditions = {
      "idle", "p2p-tcp", "p2p-udp", "p2s-tcp", "p2s-udp"};
  return kConditions;
}

bool cni_metric_in_condition(std::string_view metric, std::string_view condition) {
  if (condition == "idle") return metric == "cpu" || metric == "ram";
  return true;
}

std::string cni_metric_unit(std::string_view metric) {
  if (metric == "cpu") return "percent_cpu";
  if (metric == "ram") return "MB";
  if (metric == "throughput") return "Mbit/s";
  if (metric == "latency") return "ms";
  throw ControllerError(fmt::format("unknown CNI metric '{}'", metric));
}

SyntheticProbe::Profile SyntheticProbe::profile(const CniTarget& target) {
  // Fabric baselines for a vanilla cluster on 1 GbE links.
  static const std::map<std::string, Profile, std::less<>> kFabric = {
      {"antrea", {868.0, 742.0, 14.1, 412.0, 0.31}},
      {"calico", {912.0, 801.0, 12.4, 376.0, 0.27}},
      {"cilium", {897.0, 775.0, 16.8, 498.0, 0.29}},
      {"flannel", {905.0, 790.0, 10.9, 341.0, 0.28}},
      {"kube-ovn", {851.0, 716.0, 18.3, 533.0, 0.35}},
      {"kube-router", {921.0, 812.0, 11.6, 355.0, 0.26}},
      {"l2s-m", {879.0, 758.0, 13.2, 389.0, 0.24}},
      {"multus", {894.0, 780.0, 13.7, 402.0, 0.30}},
      {"weavenet", {806.0, 671.0, 15.9, 447.0, 0.38}},
  };
  static const std::map<Distro, Profile> kDistroScale = {
      {Distro::kVanilla, {1.00, 1.00, 1.00, 1.00, 1.00}},
      {Distro::kK3s, {0.98, 0.97, 0.86, 0.72, 1.02}},
      {Distro::kK0s, {0.97, 0.96, 0.91, 0.80, 1.03}},
      {Distro::kMicroK8s, {0.93, 0.92, 1.12, 1.25, 1.08}},
      {Distro::kEdgeNet, {0.84, 0.81, 1.21, 1.18, 1.65}},
  };
  const auto it = kFabric.find(target.fabric);
  const Profile base = it == kFabric.end() ? Profile{850.0, 720.0, 15.0, 420.0, 0.33}
                                           : it->second;
  const Profile& s = kDistroScale.at(target.distro);
  return {base.tcp_mbps * s.tcp_mbps, base.udp_mbps * s.udp_mbps,
          base.cpu_percent * s.cpu_percent, base.ram_mb * s.ram_mb,
          base.latency_ms * s.latency_ms};
}

double SyntheticProbe::measure(const ProbeCell& cell, const ClusterReady&) {
  const Profile p = profile(cell.target);
  const bool idle = cell.condition == "idle";
  const bool service = cell.condition.starts_with("p2s");
  const bool udp = cell.condition.ends_with("udp");
  double mean = 0.0;
  double cv = 0.05;
  if (cell.metric == "throughput") {
    mean = (udp ? p.udp_mbps : p.tcp_mbps) * (service ? 0.94 : 1.0);
  } else if (cell.metric == "cpu") {
    mean = idle ? 0.18 * p.cpu_percent
                : p.cpu_percent * (udp ? 1.22 : 1.0) * (service ? 1.08 : 1.0);
    cv = 0.08;
  } else if (cell.metric == "ram") {
    mean = idle ? p.ram_mb : p.ram_mb * (service ? 1.07 : 1.04);
    cv = 0.03;
  } else if (cell.metric == "latency") {
    mean = p.latency_ms * (service ? 1.18 : 1.0) * (udp ? 0.88 : 1.0);
    cv = 0.10;
  } else {
    throw ProbeError(fmt::format("synthetic probe has no model for '{}'", cell.metric));
  }
  std::mt19937_64 rng(cell.seed);
  std::normal_distribution<double> noise(0.0, cv);
  return std::max(0.0, mean * (1.0 + noise(rng)));
}

ExternalProbe::ExternalProbe(std::string command_template,
                             std::chrono::seconds timeout)
    : template_(std::move(command_template)), timeout_(timeout) {}

double ExternalProbe::measure(const ProbeCell& cell, const ClusterReady& cluster) {
  const auto nodes = cluster.ready_nodes();
  const std::string master = nodes.empty() ? "" : nodes.front().host;
  const std::string client = nodes.size() > 1 ? nodes[1].host : master;
  const std::string server = nodes.size() > 2 ? nodes[2].host : client;
  const std::string protocol =
      cell.condition == "idle" ? "" : cell.condition.substr(cell.condition.size() - 3);
  const std::map<std::string, std::string> vars = {
      {"input", cell.input},
      {"distro", std::string(to_string(cell.target.distro))},
      {"fabric", cell.target.fabric},
      {"condition", cell.condition},
      {"protocol", protocol},
      {"metric", cell.metric},
      {"replication", std::to_string(cell.replication)},
      {"seed", std::to_string(cell.seed)},
      {"master", master},
      {"client", client},
      {"server", server},
  };
  const CommandResult r = run_command(render_command(template_, vars), timeout_);
  if (r.timed_out) throw ProbeError("probe timed out");
  if (r.exit_code != 0) {
    throw ProbeError(fmt::format("probe exited {}: {}", r.exit_code, r.err));
  }
  std::istringstream lines(r.out);
  std::string line;
  while (std::getline(lines, line)) {
    if (!line.starts_with("value=")) continue;
    const std::string_view v = std::string_view(line).substr(6);
    double out = 0.0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec == std::errc() && std::isfinite(out)) return out;
    throw ProbeError(fmt::format("probe printed unparsable '{}'", line));
  }
  throw ProbeError("probe printed no value= line");
}

ControllerResult CniBenchmarkController::run(const ControllerRequest& req,
                                             std::stop_token stop) {
  check_request(req);
  const Options opts(req.options, {"probe", "probe_cmd", "probe_timeout_s"});
  std::shared_ptr<NetworkProbe> probe = probe_;
  if (!probe) {
    const std::string kind = opts.get_or("probe", "synthetic");
    if (kind == "synthetic") {
      probe = std::make_shared<SyntheticProbe>();
    } else if (kind == "external") {
      const auto cmd = opts.get("probe_cmd");
      if (!cmd) throw ControllerError("probe=external needs probe_cmd");
      probe = std::make_shared<ExternalProbe>(
          *cmd, std::chrono::seconds(opts.integer("probe_timeout_s", 600)));
    } else {
      throw ControllerError(fmt::format("unknown probe '{}'", kind));
    }
  }
  const auto metrics = metrics_or_all(req.metrics, kCniControllerId);
  const auto catalog = CompatibilityCatalog::builtin();
  std::vector<CniTarget> targets;
  for (const auto& input : req.inputs) {
    const auto t = parse_cni_input(input);
    if (!t) {
      throw ControllerError(
          fmt::format("input '{}' is not <distro>-<plugin>", input));
    }
    if (!catalog.supports(t->distro, t->fabric)) {
      throw ControllerError(fmt::format("{} does not support {}",
                                        to_string(t->distro), t->fabric));
    }
    targets.push_back(*t);
  }

  ControllerResult result;
  result.metadata["probe"] = probe->id();
  result.metadata["synthetic"] = probe->synthetic() ? "true" : "false";
  for (std::size_t i = 0; i < req.inputs.size(); ++i) {
    const std::string& input = req.inputs[i];
    for (const auto& condition : cni_conditions()) {
      for (const auto& metric : metrics) {
        if (!cni_metric_in_condition(metric, condition)) continue;
        for (std::int64_t rep = 1; rep <= req.replications; ++rep) {
          if (stop.stop_requested()) throw ControllerError("cancelled");
          ProbeCell cell{targets[i], input, condition, metric, rep, 0};
          cell.seed = mix_seed(
              mix_seed(mix_seed(mix_seed(req.seed, input), condition), metric), rep);
          try {
            const double v = probe->measure(cell, req.cluster);
            if (!std::isfinite(v)) throw ProbeError("non-finite value");
            result.samples.push_back(
                {metric, condition, input, rep, "", v, cni_metric_unit(metric)});
          } catch (const ProbeError& e) {
            result.failures.push_back({metric, condition, input, rep, e.what()});
          }
        }
      }
    }
  }
  return result;
}

// --- anomaly detection ---------------------------------------------------------------

std::string ad_metric_unit(std::string_view metric) {
  if (metric == "detection_gap_points") return "points";
  if (metric == "detection_gap_ms" || metric == "response_time_ms") return "ms";
  if (metric == "cpu_percent") return "percent_cpu";
  if (metric == "ram_mb") return "MB";
  throw ControllerError(fmt::format("unknown anomaly-detection metric '{}'", metric));
}

std::vector<std::string_view> AdHarnessConfig::option_keys() {
  return {"n",        "change_t",     "no_change",  "mu0",
          "mu1",      "sigma",        "clients",    "interval_ms",
          "stream_after_alarm",       "timeout_s",  "k",
          "h",        "c",            "hazard",     "ar_max_order",
          "training_m",               "short_run",  "short_mass",
          "critical_value"};
}

AdHarnessConfig AdHarnessConfig::from_options(const Options& o) {
  AdHarnessConfig c;
  c.series.n = o.integer("n", c.series.n);
  c.series.change_t = o.integer("change_t", *c.series.change_t);
  if (o.flag("no_change", false)) c.series.change_t.reset();
  c.series.mu0 = o.number("mu0", c.series.mu0);
  c.series.mu1 = o.number("mu1", c.series.mu1);
  c.series.sigma = o.number("sigma", c.series.sigma);
  c.clients = static_cast<int>(o.integer("clients", c.clients));
  c.interval_ms = o.number("interval_ms", c.interval_ms);
  c.stop_on_alarm = !o.flag("stream_after_alarm", false);
  c.request_timeout_s = o.number("timeout_s", c.request_timeout_s);
  DetectorConfig& d = c.detector;
  d.k = o.number("k", d.k);
  d.h = o.number("h", d.h);
  d.c = o.number("c", d.c);
  d.hazard = o.number("hazard", d.hazard);
  d.ar_max_order = static_cast<int>(o.integer("ar_max_order", d.ar_max_order));
  d.training_m = static_cast<int>(o.integer("training_m", d.training_m));
  d.short_run = static_cast<int>(o.integer("short_run", d.short_run));
  d.short_mass = o.number("short_mass", d.short_mass);
  d.critical_value = o.number("critical_value", d.critical_value);

  if (c.clients < 1 || c.clients > 64) {
    throw ControllerError("clients must lie in [1, 64]");
  }
  if (c.interval_ms < 0.0) throw ControllerError("interval_ms must be >= 0");
  if (!(c.series.sigma > 0.0)) throw ControllerError("sigma must be positive");
  if (c.series.n <= d.training_m) {
    throw ControllerError(fmt::format("series length {} leaves no monitoring "
                                      "window after {} training samples",
                                      c.series.n, d.training_m));
  }
  if (c.series.change_t &&
      (*c.series.change_t < d.training_m || *c.series.change_t >= c.series.n)) {
    throw ControllerError(fmt::format("change_t {} must lie in [{}, {})",
                                      *c.series.change_t, d.training_m, c.series.n));
  }
  return c;
}

namespace {

struct ClientOutcome {
  std::vector<MetricSample> samples;
  std::vector<SampleFailure> failures;
};

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
      .count();
}

ClientOutcome run_client(int port, const AdHarnessConfig& cfg, DetectorKind kind,
                         const std::string& input, std::int64_t rep, int client,
                         std::uint64_t series_seed,
                         const std::vector<std::string>& metrics,
                         const std::atomic<bool>& cancelled) {
  ClientOutcome out;
  const std::string condition = cfg.series.change_t ? "mean-shift" : "null";
  const std::string node = fmt::format("client-{}", client);
  const auto wants = [&](std::string_view m) {
    return std::find(metrics.begin(), metrics.end(), m) != metrics.end();
  };
  const auto emit = [&](const std::string& metric, double value) {
    if (wants(metric)) {
      out.samples.push_back(
          {metric, condition, input, rep, node, value, ad_metric_unit(metric)});
    }
  };
  const auto fail = [&](const std::string& metric, const std::string& reason) {
    if (metric.empty() || wants(metric)) {
      out.failures.push_back({metric, condition, input, rep,
                              fmt::format("{}: {}", node, reason)});
    }
  };

  SeriesConfig sc = cfg.series;
  sc.seed = series_seed;
  const std::vector<double> series = generate_series(sc);
  DetectorConfig dc = cfg.detector;
  dc.kind = kind;

  AdClient api("127.0.0.1", port,
               std::chrono::milliseconds(
                   static_cast<std::int64_t>(cfg.request_timeout_s * 1000.0)));
  std::vector<double> sent_ms;
  sent_ms.reserve(series.size());
  std::optional<std::int64_t> alarm_t;
  double alarm_ms = 0.0;
  DetectorMetricsReply m;
  double emitted_ms = 0.0;
  try {
    const std::string id = api.create(dc);
    const auto t0 = std::chrono::steady_clock::now();
    const auto interval = std::chrono::duration<double, std::milli>(cfg.interval_ms);
    for (std::size_t t = 0; t < series.size(); ++t) {
      if (cancelled.load()) break;
      std::this_thread::sleep_until(
          t0 + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                   interval * static_cast<double>(t)));
      sent_ms.push_back(ms_since(t0));
      const SampleReply r = api.post_sample(id, static_cast<std::int64_t>(t), series[t]);
      if (!r.training && r.alarm && !alarm_t) {
        alarm_t = static_cast<std::int64_t>(t);
        alarm_ms = ms_since(t0);
        if (cfg.stop_on_alarm) break;
      }
    }
    m = api.metrics(id);
    emitted_ms = ms_since(t0);
    api.remove(id);
  } catch (const AdServiceError& e) {
    fail("", e.what());
    return out;
  }
  if (cancelled.load()) return out;

  if (!is_online(kind)) {
    emit("response_time_ms", m.total_processing_ns / 1e6);
  } else {
    emit("response_time_ms", m.mean_processing_ns / 1e6);
  }
  emit("cpu_percent", m.cpu_percent);
  emit("ram_mb", m.ram_mb);

  const auto gap_fail = [&](const std::string& reason) {
    fail("detection_gap_points", reason);
    fail("detection_gap_ms", reason);
  };
  if (!is_online(kind)) {
    if (m.offline && m.offline->alarm) {
      alarm_t = m.offline->change_estimate;
      alarm_ms = emitted_ms;
    } else {
      alarm_t.reset();
    }
  }
  if (!cfg.series.change_t) {
    gap_fail(alarm_t ? fmt::format("false alarm at t={}", *alarm_t)
                     : std::string("no change injected"));
    return out;
  }
  const std::int64_t change = *cfg.series.change_t;
  if (!alarm_t) {
    gap_fail("missed detection");
    return out;
  }
  if (!is_online(kind)) {
    emit("detection_gap_points", static_cast<double>(std::llabs(*alarm_t - change)));
    emit("detection_gap_ms", alarm_ms - sent_ms[static_cast<std::size_t>(change)]);
    return out;
  }
  // Streaming stops at the alarm, so the timeline may end before change_t.
  if (*alarm_t < change) {
    gap_fail(fmt::format("false alarm at t={}", *alarm_t));
    return out;
  }
  const GapMetrics g = compute_gap_metrics(*alarm_t, change, sent_ms, alarm_ms);
  emit("detection_gap_points", static_cast<double>(g.gap_points));
  emit("detection_gap_ms", g.gap_ms);
  return out;
}

}  // namespace

ControllerResult AnomalyDetectionController::run(const ControllerRequest& req,
                                                 std::stop_token stop) {
  check_request(req);
  const Options opts(req.options, AdHarnessConfig::option_keys());
  const AdHarnessConfig cfg = AdHarnessConfig::from_options(opts);
  const auto metrics = metrics_or_all(req.metrics, kAdControllerId);
  std::vector<DetectorKind> kinds;
  for (const auto& input : req.inputs) {
    const auto k = parse_detector_kind(input);
    if (!k) throw ControllerError(fmt::format("unknown detector '{}'", input));
    kinds.push_back(*k);
  }

  AdServer server;
  int port = 0;
  try {
    port = server.start();
  } catch (const AdServiceError& e) {
    throw ControllerError(fmt::format("detector server failed to start: {}", e.what()));
  }

  ControllerResult result;
  result.metadata["clients"] = std::to_string(cfg.clients);
  result.metadata["interval_ms"] = fmt::format("{}", cfg.interval_ms);
  result.metadata["series_n"] = std::to_string(cfg.series.n);
  result.metadata["change_t"] =
      cfg.series.change_t ? std::to_string(*cfg.series.change_t) : "none";
  std::atomic<bool> cancelled{false};
  std::stop_callback on_stop(stop, [&] { cancelled = true; });

  for (std::size_t i = 0; i < req.inputs.size(); ++i) {
    DetectorConfig dc = cfg.detector;
    dc.kind = kinds[i];
    result.metadata["detector." + req.inputs[i]] = dc.to_json();
    for (std::int64_t rep = 1; rep <= req.replications; ++rep) {
      std::vector<ClientOutcome> outcomes(static_cast<std::size_t>(cfg.clients));
      {
        std::vector<std::jthread> threads;
        for (int c = 0; c < cfg.clients; ++c) {
          // The series depends on (seed, replication, client) only, so every
          // detector sees the same data.
          const std::uint64_t s = mix_seed(mix_seed(req.seed, rep), c);
          threads.emplace_back([&, c, s] {
            outcomes[static_cast<std::size_t>(c)] =
                run_client(port, cfg, kinds[i], req.inputs[i], rep, c + 1, s,
                           metrics, cancelled);
          });
        }
      }
      if (cancelled.load()) throw ControllerError("cancelled");
      for (auto& o : outcomes) {
        result.samples.insert(result.samples.end(), o.samples.begin(), o.samples.end());
        result.failures.insert(result.failures.end(), o.failures.begin(),
                               o.failures.end());
      }
    }
  }
  server.stop();
  return result;
}

}  // namespace edgebench
