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

// Infrastructure drivers: allocate cluster nodes, restore snapshots and
// release them. The simulated driver is deterministic and keeps per-node
// software state in memory; the shell driver runs operator-supplied command
// templates.

#ifndef EDGEBENCH_INFRA_H_
#define EDGEBENCH_INFRA_H_

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "edgebench/descriptor.h"
#include "edgebench/step.h"

namespace edgebench {

enum class NodeRole { kMaster, kWorker };
enum class NodeState { kAllocated, kOsReady, kK8sReady, kReleased };

std::string_view to_string(NodeRole r);
std::string_view to_string(NodeState s);
std::optional<NodeRole> parse_node_role(std::string_view s);
std::optional<NodeState> parse_node_state(std::string_view s);

// Immutable snapshot of an allocated node; state changes produce new values.
struct NodeHandle {
  std::string host;
  std::string ip;
  std::string mac;
  NodeRole role = NodeRole::kWorker;
  NodeState state = NodeState::kAllocated;
  std::optional<std::string> snapshot_id;

  // Forward transitions (allocated -> os_ready -> k8s_ready) or to
  // released. Throws std::logic_error otherwise.
  NodeHandle with_state(NodeState next) const;

  friend bool operator==(const NodeHandle&, const NodeHandle&) = default;
};

struct NodeRequest {
  NodeSpec spec;
  NodeRole role = NodeRole::kWorker;
};

// Masters first, then workers, in declaration order.
std::vector<NodeRequest> node_requests(const ExperimentDescriptor& d);

struct DriverCapabilities {
  bool supports_snapshots = false;
  bool supports_mac_pinning = false;
  int max_nodes = 0;
};

class InfraError : public std::runtime_error {
 public:
  enum class Kind {
    kEmptySpec,
    kCapacity,
    kUnknownImage,
    kUnsupported,
    kUnknownSnapshot,
    kForeignHandle,
    kCommandFailed,
    kTransient,
  };

  InfraError(Kind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

class Driver {
 public:
  virtual ~Driver() = default;

  virtual std::string id() const = 0;
  virtual DriverCapabilities capabilities() const = 0;

  // One handle per request, in request order, each in state os_ready.
  virtual std::vector<NodeHandle> allocate_nodes(
      std::span<const NodeRequest> spec, std::string_view osimage,
      bool use_snapshots) = 0;
  virtual NodeHandle restore_snapshot(const NodeHandle& node) = 0;
  // Returns warnings (e.g. double release). Throws on foreign handles.
  virtual std::vector<std::string> release(
      std::span<const NodeHandle> nodes) = 0;

  // Re-registers handles persisted by an earlier process, for resume.
  virtual void adopt(std::span<const NodeHandle> nodes) = 0;

  virtual StepExecutor& executor() = 0;

  // Fails the executor's step on `host` whose expected_state equals
  // `expected_state`. Drivers without fault injection ignore this.
  virtual void inject_step_failure(const std::string& /*host*/,
                                   const std::string& /*expected_state*/) {}
};

// Software state of one simulated node.
struct SimNode {
  NodeHandle handle;
  std::map<std::string, std::string> packages;
  std::map<std::string, std::string> files;
  std::set<std::string> services;
  std::set<std::string> markers;
  std::set<std::string> k8s_objects;
  std::map<std::string, std::string> installed;  // app -> version

  friend bool operator==(const SimNode&, const SimNode&) = default;
};

struct SimulatedDriverOptions {
  std::uint64_t seed = 0;
  int max_nodes = 16;
  std::set<std::string> images = {"ubuntu-22-clean", "ubuntu-20-clean",
                                  "debian-12-clean"};
  // Synthetic per-operation latency, drawn uniformly.
  int latency_min_ms = 50;
  int latency_max_ms = 200;
  bool sleep = true;
};

class SimulatedDriver final : public Driver {
 public:
  explicit SimulatedDriver(SimulatedDriverOptions options = {});
  ~SimulatedDriver() override;

  std::string id() const override { return "simulated"; }
  DriverCapabilities capabilities() const override;
  std::vector<NodeHandle> allocate_nodes(std::span<const NodeRequest> spec,
                                        std::string_view osimage,
                                        bool use_snapshots) override;
  NodeHandle restore_snapshot(const NodeHandle& node) override;
  std::vector<std::string> release(std::span<const NodeHandle> nodes) override;
  void adopt(std::span<const NodeHandle> nodes) override;
  StepExecutor& executor() override;
  void inject_step_failure(const std::string& host,
                           const std::string& expected_state) override;

  // Inspection.
  std::optional<SimNode> node(const std::string& host) const;
  int in_use() const;
  std::vector<int> synthetic_latencies_ms() const;

 private:
  class Executor;
  friend class Executor;

  void simulate_latency();

  SimulatedDriverOptions options_;
  mutable std::mutex mu_;
  std::mt19937_64 rng_;
  std::map<std::string, SimNode> nodes_;
  std::map<std::string, SimNode> staged_;
  std::set<std::pair<std::string, std::string>> failures_;
  std::vector<int> latencies_;
  std::unique_ptr<Executor> executor_;
};

// JSON config: {"allocate_cmd", "restore_cmd", "release_cmd", "exec_cmd",
// "max_nodes", "supports_mac_pinning", "timeout_s"}. Templates take
// {host} {ip} {mac} {image} {role} {snapshot}; exec_cmd also takes
// {command}. Allocation stdout may contain `ip=<addr>` overriding the
// requested address.
struct ShellDriverConfig {
  std::string allocate_cmd;
  std::string restore_cmd;
  std::string release_cmd;
  std::string exec_cmd;
  int max_nodes = 64;
  bool supports_mac_pinning = true;
  std::chrono::seconds timeout{600};

  static ShellDriverConfig from_json(std::string_view json_text);
};

class ShellDriver final : public Driver {
 public:
  explicit ShellDriver(ShellDriverConfig config);
  ~ShellDriver() override;

  std::string id() const override { return "shell"; }
  DriverCapabilities capabilities() const override;
  std::vector<NodeHandle> allocate_nodes(std::span<const NodeRequest> spec,
                                        std::string_view osimage,
                                        bool use_snapshots) override;
  NodeHandle restore_snapshot(const NodeHandle& node) override;
  std::vector<std::string> release(std::span<const NodeHandle> nodes) override;
  void adopt(std::span<const NodeHandle> nodes) override;
  StepExecutor& executor() override;

  // The shell line a step turns into, before exec_cmd wrapping.
  static std::string step_command(const Step& step);

 private:
  class Executor;

  ShellDriverConfig config_;
  std::mutex mu_;
  std::map<std::string, NodeHandle> owned_;
  std::string image_;
  std::unique_ptr<Executor> executor_;
};

}  // namespace edgebench

#endif  // EDGEBENCH_INFRA_H_
