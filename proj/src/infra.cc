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

#include "edgebench/infra.h"

#include <sstream>
#include <thread>

#include <fmt/core.h>
#include "json.hpp"

#include "edgebench/process.h"

namespace edgebench {
namespace {

SimNode fresh_node(const NodeHandle& h) {
  SimNode n;
  n.handle = h;
  return n;
}

}  // namespace

std::string_view to_string(StepKind k) {
  switch (k) {
    case StepKind::kPackageInstall:
      return "package_install";
    case StepKind::kFileWrite:
      return "file_write";
    case StepKind::kCommand:
      return "command";
    case StepKind::kServiceEnable:
      return "service_enable";
    case StepKind::kK8sApply:
      return "k8s_apply";
  }
  return "command";
}

std::optional<StepKind> parse_step_kind(std::string_view s) {
  if (s == "package_install") return StepKind::kPackageInstall;
  if (s == "file_write") return StepKind::kFileWrite;
  if (s == "command") return StepKind::kCommand;
  if (s == "service_enable") return StepKind::kServiceEnable;
  if (s == "k8s_apply") return StepKind::kK8sApply;
  return std::nullopt;
}

std::string_view to_string(StepStatus s) {
  switch (s) {
    case StepStatus::kChanged:
      return "changed";
    case StepStatus::kUnchanged:
      return "unchanged";
    case StepStatus::kFailed:
      return "failed";
  }
  return "failed";
}

std::string_view to_string(NodeRole r) {
  return r == NodeRole::kMaster ? "master" : "worker";
}

std::string_view to_string(NodeState s) {
  switch (s) {
    case NodeState::kAllocated:
      return "allocated";
    case NodeState::kOsReady:
      return "os_ready";
    case NodeState::kK8sReady:
      return "k8s_ready";
    case NodeState::kReleased:
      return "released";
  }
  return "released";
}

std::optional<NodeRole> parse_node_role(std::string_view s) {
  if (s == "master") return NodeRole::kMaster;
  if (s == "worker") return NodeRole::kWorker;
  return std::nullopt;
}

std::optional<NodeState> parse_node_state(std::string_view s) {
  if (s == "allocated") return NodeState::kAllocated;
  if (s == "os_ready") return NodeState::kOsReady;
  if (s == "k8s_ready") return NodeState::kK8sReady;
  if (s == "released") return NodeState::kReleased;
  return std::nullopt;
}

NodeHandle NodeHandle::with_state(NodeState next) const {
  if (next != NodeState::kReleased &&
      static_cast<int>(next) < static_cast<int>(state)) {
    throw std::logic_error(fmt::format("node {}: illegal transition {} -> {}",
                                       host, to_string(state),
                                       to_string(next)));
  }
  if (state == NodeState::kReleased && next != NodeState::kReleased) {
    throw std::logic_error(
        fmt::format("node {}: released nodes cannot change state", host));
  }
  NodeHandle out = *this;
  out.state = next;
  return out;
}

std::vector<NodeRequest> node_requests(const ExperimentDescriptor& d) {
  std::vector<NodeRequest> out;
  for (auto& n : d.masters.nodes()) out.push_back({n, NodeRole::kMaster});
  for (auto& n : d.workers.nodes()) out.push_back({n, NodeRole::kWorker});
  return out;
}

// --- simulated -------------------------------------------------------------

class SimulatedDriver::Executor final : public StepExecutor {
 public:
  explicit Executor(SimulatedDriver& driver) : driver_(driver) {}

  void begin(const NodeHandle& node) override {
    int delay = 0;
    {
      std::lock_guard lock(driver_.mu_);
      auto& live = live_node(node);
      driver_.staged_[node.host] = live;
      delay = draw_latency();
    }
    sleep_for(delay);
  }

  StepResult apply(const NodeHandle& node, const Step& step) override {
    std::lock_guard lock(driver_.mu_);
    auto it = driver_.staged_.find(node.host);
    if (it == driver_.staged_.end()) {
      it = driver_.staged_.emplace(node.host, live_node(node)).first;
    }
    if (driver_.failures_.contains({node.host, step.expected_state})) {
      return {StepStatus::kFailed,
              fmt::format("injected failure: {}", step.expected_state)};
    }
    SimNode& n = it->second;
    auto changed = [](bool c, std::string what) {
      return StepResult{c ? StepStatus::kChanged : StepStatus::kUnchanged,
                        std::move(what)};
    };
    switch (step.kind) {
      case StepKind::kPackageInstall: {
        const std::string name = step.param("name");
        const std::string version = step.param("version");
        if (name.empty()) return {StepStatus::kFailed, "package name missing"};
        auto [pos, inserted] = n.packages.try_emplace(name, version);
        const bool c = inserted || pos->second != version;
        pos->second = version;
        return changed(c, fmt::format("package {} {}", name, version));
      }
      case StepKind::kFileWrite: {
        const std::string path = step.param("path");
        if (path.empty()) return {StepStatus::kFailed, "file path missing"};
        const std::string content = step.param("content");
        auto [pos, inserted] = n.files.try_emplace(path, content);
        const bool c = inserted || pos->second != content;
        pos->second = content;
        return changed(c, fmt::format("file {}", path));
      }
      case StepKind::kCommand: {
        std::string marker = step.param("creates");
        if (marker.empty()) marker = "cmd:" + step.param("cmd");
        return changed(n.markers.insert(marker).second,
                       fmt::format("command {}", step.param("cmd")));
      }
      case StepKind::kServiceEnable: {
        const std::string name = step.param("name");
        return changed(n.services.insert(name).second,
                       fmt::format("service {}", name));
      }
      case StepKind::kK8sApply: {
        const std::string ns = step.param("namespace");
        const std::string obj =
            (ns.empty() ? "" : ns + "/") + step.param("manifest");
        return changed(n.k8s_objects.insert(obj).second,
                       fmt::format("applied {}", obj));
      }
    }
    return {StepStatus::kFailed, "unknown step kind"};
  }

  void commit(const NodeHandle& node, std::string_view app,
              std::string_view version) override {
    std::lock_guard lock(driver_.mu_);
    auto it = driver_.staged_.find(node.host);
    if (it == driver_.staged_.end()) return;
    it->second.installed[std::string(app)] = std::string(version);
    auto& live = driver_.nodes_.at(node.host);
    it->second.handle = live.handle;
    live = std::move(it->second);
    driver_.staged_.erase(it);
  }

  void rollback(const NodeHandle& node) override {
    std::lock_guard lock(driver_.mu_);
    driver_.staged_.erase(node.host);
  }

 private:
  SimNode& live_node(const NodeHandle& node) {
    const auto it = driver_.nodes_.find(node.host);
    if (it == driver_.nodes_.end() ||
        it->second.handle.state == NodeState::kReleased) {
      throw InfraError(InfraError::Kind::kForeignHandle,
                       fmt::format("node {} is not allocated by this driver",
                                   node.host));
    }
    return it->second;
  }

  int draw_latency() {
    std::uniform_int_distribution<int> dist(driver_.options_.latency_min_ms,
                                            driver_.options_.latency_max_ms);
    const int ms = dist(driver_.rng_);
    driver_.latencies_.push_back(ms);
    return ms;
  }

  void sleep_for(int ms) const {
    if (driver_.options_.sleep) {
      std::this_thread::sleep_for(std::chrono::milliseconds(ms));
    }
  }

  SimulatedDriver& driver_;
};

SimulatedDriver::SimulatedDriver(SimulatedDriverOptions options)
    : options_(std::move(options)),
      rng_(options_.seed),
      executor_(std::make_unique<Executor>(*this)) {}

SimulatedDriver::~SimulatedDriver() = default;

DriverCapabilities SimulatedDriver::capabilities() const {
  return {.supports_snapshots = true,
          .supports_mac_pinning = true,
          .max_nodes = options_.max_nodes};
}

void SimulatedDriver::simulate_latency() {
  int ms = 0;
  {
    std::lock_guard lock(mu_);
    std::uniform_int_distribution<int> dist(options_.latency_min_ms,
                                            options_.latency_max_ms);
    ms = dist(rng_);
    latencies_.push_back(ms);
  }
  if (options_.sleep) std::this_thread::sleep_for(std::chrono::milliseconds(ms));
}

std::vector<NodeHandle> SimulatedDriver::allocate_nodes(
    std::span<const NodeRequest> spec, std::string_view osimage,
    bool use_snapshots) {
  if (spec.empty()) {
    throw InfraError(InfraError::Kind::kEmptySpec, "empty spec");
  }
  std::vector<NodeHandle> out;
  {
    std::lock_guard lock(mu_);
    if (!options_.images.contains(std::string(osimage))) {
      throw InfraError(InfraError::Kind::kUnknownImage,
                       fmt::format("unknown OS image '{}'", osimage));
    }
    int used = 0;
    for (const auto& [_, n] : nodes_) {
      if (n.handle.state != NodeState::kReleased) ++used;
    }
    if (used + static_cast<int>(spec.size()) > options_.max_nodes) {
      throw InfraError(
          InfraError::Kind::kCapacity,
          fmt::format("capacity exceeded: {} in use, {} requested, max {}",
                      used, spec.size(), options_.max_nodes));
    }
    for (const auto& req : spec) {
      const auto it = nodes_.find(req.spec.host);
      if (it != nodes_.end() && it->second.handle.state != NodeState::kReleased) {
        throw InfraError(InfraError::Kind::kCapacity,
                         fmt::format("host {} is already allocated",
                                     req.spec.host));
      }
    }
    for (const auto& req : spec) {
      NodeHandle h{.host = req.spec.host,
                   .ip = req.spec.ip,
                   .mac = req.spec.mac,
                   .role = req.role,
                   .state = NodeState::kAllocated,
                   .snapshot_id = std::nullopt};
      if (use_snapshots) {
        h.snapshot_id = fmt::format("snap-{}-{}", req.spec.host, osimage);
      }
      h = h.with_state(NodeState::kOsReady);
      nodes_[h.host] = fresh_node(h);
      out.push_back(h);
    }
  }
  for (std::size_t i = 0; i < spec.size(); ++i) simulate_latency();
  return out;
}

NodeHandle SimulatedDriver::restore_snapshot(const NodeHandle& node) {
  NodeHandle restored;
  {
    std::lock_guard lock(mu_);
    const auto it = nodes_.find(node.host);
    if (it == nodes_.end() || it->second.handle.state == NodeState::kReleased) {
      throw InfraError(InfraError::Kind::kForeignHandle,
                       fmt::format("node {} is not allocated by this driver",
                                   node.host));
    }
    if (!it->second.handle.snapshot_id) {
      throw InfraError(InfraError::Kind::kUnknownSnapshot,
                       fmt::format("node {} has no recorded snapshot",
                                   node.host));
    }
    // Re-imaging resets the node, so state returns to os_ready.
    restored = it->second.handle;
    restored.state = NodeState::kOsReady;
    it->second = fresh_node(restored);
  }
  simulate_latency();
  return restored;
}

std::vector<std::string> SimulatedDriver::release(
    std::span<const NodeHandle> nodes) {
  std::vector<std::string> warnings;
  if (nodes.empty()) return warnings;
  {
    std::lock_guard lock(mu_);
    for (const auto& h : nodes) {
      if (!nodes_.contains(h.host)) {
        throw InfraError(InfraError::Kind::kForeignHandle,
                         fmt::format("node {} is not owned by this driver",
                                     h.host));
      }
    }
    for (const auto& h : nodes) {
      auto& n = nodes_.at(h.host);
      if (n.handle.state == NodeState::kReleased) {
        warnings.push_back(fmt::format("node {} already released", h.host));
        continue;
      }
      n.handle = n.handle.with_state(NodeState::kReleased);
    }
  }
  simulate_latency();
  return warnings;
}

void SimulatedDriver::adopt(std::span<const NodeHandle> nodes) {
  std::lock_guard lock(mu_);
  for (const auto& h : nodes) {
    auto it = nodes_.find(h.host);
    if (it == nodes_.end()) {
      nodes_[h.host] = fresh_node(h);
    } else {
      it->second.handle = h;
    }
  }
}

StepExecutor& SimulatedDriver::executor() { return *executor_; }

void SimulatedDriver::inject_step_failure(const std::string& host,
                                          const std::string& expected_state) {
  std::lock_guard lock(mu_);
  failures_.insert({host, expected_state});
}

std::optional<SimNode> SimulatedDriver::node(const std::string& host) const {
  std::lock_guard lock(mu_);
  const auto it = nodes_.find(host);
  if (it == nodes_.end()) return std::nullopt;
  return it->second;
}

int SimulatedDriver::in_use() const {
  std::lock_guard lock(mu_);
  int used = 0;
  for (const auto& [_, n] : nodes_) {
    if (n.handle.state != NodeState::kReleased) ++used;
  }
  return used;
}

std::vector<int> SimulatedDriver::synthetic_latencies_ms() const {
  std::lock_guard lock(mu_);
  return latencies_;
}

// --- shell -----------------------------------------------------------------

ShellDriverConfig ShellDriverConfig::from_json(std::string_view json_text) {
  const auto j = nlohmann::json::parse(json_text);
  ShellDriverConfig c;
  c.allocate_cmd = j.value("allocate_cmd", "");
  c.restore_cmd = j.value("restore_cmd", "");
  c.release_cmd = j.value("release_cmd", "");
  c.exec_cmd = j.value("exec_cmd", "");
  c.max_nodes = j.value("max_nodes", 64);
  c.supports_mac_pinning = j.value("supports_mac_pinning", true);
  c.timeout = std::chrono::seconds(j.value("timeout_s", 600));
  if (c.allocate_cmd.empty()) {
    throw std::invalid_argument("shell driver config requires allocate_cmd");
  }
  return c;
}

namespace {

std::map<std::string, std::string> node_vars(const NodeHandle& h,
                                             std::string_view image) {
  return {{"host", h.host},
          {"ip", h.ip},
          {"mac", h.mac},
          {"image", std::string(image)},
          {"role", std::string(to_string(h.role))},
          {"snapshot", h.snapshot_id.value_or("")}};
}

std::string command_failure(std::string_view what, const NodeHandle& h,
                            const CommandResult& r) {
  if (r.timed_out) return fmt::format("{} for {} timed out", what, h.host);
  return fmt::format("{} for {} exited with {}: {}", what, h.host, r.exit_code,
                     r.err.empty() ? r.out : r.err);
}

}  // namespace

class ShellDriver::Executor final : public StepExecutor {
 public:
  explicit Executor(const ShellDriverConfig& config) : config_(config) {}

  void begin(const NodeHandle&) override {}

  StepResult apply(const NodeHandle& node, const Step& step) override {
    if (config_.exec_cmd.empty()) {
      return {StepStatus::kFailed, "shell driver config has no exec_cmd"};
    }
    auto vars = node_vars(node, "");
    vars["command"] = ShellDriver::step_command(step);
    const auto r = run_command(render_command(config_.exec_cmd, vars),
                               config_.timeout);
    if (!r.ok()) {
      return {StepStatus::kFailed,
              command_failure(to_string(step.kind), node, r)};
    }
    // Scripts report idempotent no-ops with a marker line.
    const bool unchanged = r.out.find("edgebench: unchanged") != std::string::npos;
    return {unchanged ? StepStatus::kUnchanged : StepStatus::kChanged, r.out};
  }

  void commit(const NodeHandle&, std::string_view, std::string_view) override {}
  void rollback(const NodeHandle&) override {}

 private:
  const ShellDriverConfig& config_;
};

ShellDriver::ShellDriver(ShellDriverConfig config)
    : config_(std::move(config)),
      executor_(std::make_unique<Executor>(config_)) {}

ShellDriver::~ShellDriver() = default;

DriverCapabilities ShellDriver::capabilities() const {
  return {.supports_snapshots = !config_.restore_cmd.empty(),
          .supports_mac_pinning = config_.supports_mac_pinning,
          .max_nodes = config_.max_nodes};
}

std::vector<NodeHandle> ShellDriver::allocate_nodes(
    std::span<const NodeRequest> spec, std::string_view osimage,
    bool use_snapshots) {
  if (spec.empty()) {
    throw InfraError(InfraError::Kind::kEmptySpec, "empty spec");
  }
  std::lock_guard lock(mu_);
  int used = 0;
  for (const auto& [_, h] : owned_) {
    if (h.state != NodeState::kReleased) ++used;
  }
  if (used + static_cast<int>(spec.size()) > config_.max_nodes) {
    throw InfraError(InfraError::Kind::kCapacity,
                     fmt::format("capacity exceeded: {} in use, {} requested, "
                                 "max {}",
                                 used, spec.size(), config_.max_nodes));
  }
  image_ = std::string(osimage);
  std::vector<NodeHandle> out;
  for (const auto& req : spec) {
    NodeHandle h{.host = req.spec.host,
                 .ip = req.spec.ip,
                 .mac = config_.supports_mac_pinning ? req.spec.mac : "",
                 .role = req.role,
                 .state = NodeState::kAllocated,
                 .snapshot_id = std::nullopt};
    if (use_snapshots && !config_.restore_cmd.empty()) {
      h.snapshot_id = fmt::format("snap-{}-{}", h.host, osimage);
    }
    const auto r = run_command(
        render_command(config_.allocate_cmd, node_vars(h, osimage)),
        config_.timeout);
    if (!r.ok()) {
      throw InfraError(InfraError::Kind::kCommandFailed,
                       command_failure("allocate", h, r));
    }
    std::istringstream lines(r.out);
    for (std::string line; std::getline(lines, line);) {
      if (line.starts_with("ip=")) h.ip = line.substr(3);
    }
    h = h.with_state(NodeState::kOsReady);
    owned_[h.host] = h;
    out.push_back(h);
  }
  return out;
}

NodeHandle ShellDriver::restore_snapshot(const NodeHandle& node) {
  if (config_.restore_cmd.empty()) {
    throw InfraError(InfraError::Kind::kUnsupported,
                     "shell driver has no restore_cmd; snapshots unsupported");
  }
  std::lock_guard lock(mu_);
  const auto it = owned_.find(node.host);
  if (it == owned_.end()) {
    throw InfraError(InfraError::Kind::kForeignHandle,
                     fmt::format("node {} is not owned by this driver",
                                 node.host));
  }
  if (!it->second.snapshot_id) {
    throw InfraError(InfraError::Kind::kUnknownSnapshot,
                     fmt::format("node {} has no recorded snapshot", node.host));
  }
  const auto r = run_command(
      render_command(config_.restore_cmd, node_vars(it->second, image_)),
      config_.timeout);
  if (!r.ok()) {
    throw InfraError(InfraError::Kind::kCommandFailed,
                     command_failure("restore", it->second, r));
  }
  it->second.state = NodeState::kOsReady;
  return it->second;
}

std::vector<std::string> ShellDriver::release(
    std::span<const NodeHandle> nodes) {
  std::vector<std::string> warnings;
  std::lock_guard lock(mu_);
  for (const auto& h : nodes) {
    if (!owned_.contains(h.host)) {
      throw InfraError(InfraError::Kind::kForeignHandle,
                       fmt::format("node {} is not owned by this driver",
                                   h.host));
    }
  }
  for (const auto& h : nodes) {
    auto& mine = owned_.at(h.host);
    if (mine.state == NodeState::kReleased) {
      warnings.push_back(fmt::format("node {} already released", h.host));
      continue;
    }
    if (!config_.release_cmd.empty()) {
      const auto r = run_command(
          render_command(config_.release_cmd, node_vars(mine, image_)),
          config_.timeout);
      if (!r.ok()) {
        throw InfraError(InfraError::Kind::kCommandFailed,
                         command_failure("release", mine, r));
      }
    }
    mine = mine.with_state(NodeState::kReleased);
  }
  return warnings;
}

void ShellDriver::adopt(std::span<const NodeHandle> nodes) {
  std::lock_guard lock(mu_);
  for (const auto& h : nodes) owned_[h.host] = h;
}

StepExecutor& ShellDriver::executor() { return *executor_; }

std::string ShellDriver::step_command(const Step& step) {
  switch (step.kind) {
    case StepKind::kPackageInstall: {
      const std::string v = step.param("version");
      return "apt-get install -y " +
             shell_quote(v.empty() || v == "latest" ? step.param("name")
                                                    : step.param("name") + "=" + v);
    }
    case StepKind::kFileWrite:
      return "printf %s " + shell_quote(step.param("content")) + " > " +
             shell_quote(step.param("path"));
    case StepKind::kCommand: {
      const std::string creates = step.param("creates");
      if (creates.empty()) return step.param("cmd");
      return "if test -e " + shell_quote(creates) +
             "; then echo 'edgebench: unchanged'; else " + step.param("cmd") +
             "; fi";
    }
    case StepKind::kServiceEnable:
      return "systemctl enable --now " + shell_quote(step.param("name"));
    case StepKind::kK8sApply: {
      const std::string ns = step.param("namespace");
      return "kubectl apply" + (ns.empty() ? "" : " -n " + shell_quote(ns)) +
             " -f " + shell_quote(step.param("manifest"));
    }
  }
  return "true";
}

}  // namespace edgebench
