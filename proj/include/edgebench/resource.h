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

// Per-node software deployment. Apps are catalog entries (one JSON file
// each) whose steps are rendered with a version and cluster context and then
// applied through a driver's StepExecutor.
//
// Catalog file:
//
//   {"name": "docker", "versions": ["24.0", "23.0"],
//    "allowed_scopes": ["all", "master", "worker"],
//    "steps": [{"kind": "package_install",
//               "payload": {"name": "docker-ce", "version": "{{version}}"},
//               "expected_state": "docker-ce {{version}} installed"}]}
//
// Placeholders: {{version}} {{app}} {{k8s_type}} {{k8s_version}}
// {{fabric}} {{scheduler}} {{master_host}} {{master_ip}}.

#ifndef EDGEBENCH_RESOURCE_H_
#define EDGEBENCH_RESOURCE_H_

#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "edgebench/compat.h"
#include "edgebench/descriptor.h"
#include "edgebench/infra.h"
#include "edgebench/step.h"

namespace edgebench {

class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AppTemplate {
  std::string name;
  std::string version;
  std::vector<Step> steps;
  std::set<AppScope> allowed_scopes;

  friend bool operator==(const AppTemplate&, const AppTemplate&) = default;
};

struct CatalogEntry {
  std::string name;
  std::string description;
  std::vector<std::string> versions;  // newest first; "latest" = versions[0]
  std::set<AppScope> allowed_scopes;
  std::vector<Step> steps;            // unrendered
};

// Cluster parameters available to templates.
struct K8sContext {
  Distro type = Distro::kVanilla;
  std::string version;
  std::string scheduler;
  std::string fabric;
  std::string master_host;
  std::string master_ip;
};

K8sContext make_k8s_context(const K8sSection& k8s,
                            std::span<const NodeHandle> cluster);

class AppCatalog {
 public:
  // Every *.json file in `dir`, in file name order.
  static AppCatalog load_dir(const std::filesystem::path& dir);
  static CatalogEntry parse_entry(std::string_view json_text);

  // Throws ResourceError on a duplicate name.
  void add(CatalogEntry entry);

  const CatalogEntry* find(std::string_view name) const;
  std::vector<std::string> names() const;
  std::map<std::string, std::set<AppScope>, std::less<>> scopes() const;

 private:
  std::map<std::string, CatalogEntry, std::less<>> entries_;
};

// Pure. Throws ResourceError on unknown app, unknown version or an unknown
// placeholder.
AppTemplate render_template(const AppCatalog& catalog, std::string_view name,
                            std::string_view version, const K8sContext& ctx);

// all: every node; master / worker: by role; cluster: the first master.
std::vector<NodeHandle> resolve_scope(AppScope scope,
                                      std::span<const NodeHandle> cluster);

struct StepOutcome {
  std::size_t index = 0;
  StepKind kind = StepKind::kCommand;
  std::string expected_state;
  StepStatus status = StepStatus::kUnchanged;
  std::string output;
};

struct StepOutcomes {
  std::string host;
  std::string app;
  std::string version;
  std::vector<StepOutcome> steps;  // attempted steps only

  bool ok() const;
  bool all_changed() const;
  bool all_unchanged() const;
  // "step 2 (wireguard configured) failed: ..." or empty.
  std::string failure() const;
};

// Applies steps in order, stopping at the first failure. The executor's
// staged changes are committed (recording app@version) only when every step
// succeeds; otherwise they are rolled back.
StepOutcomes apply_steps(const NodeHandle& node, const AppTemplate& tmpl,
                         StepExecutor& executor);

// Pseudo-app "k8s": control-plane bring-up for a master, join for a worker.
// Both record "type=..;version=..;fabric=.." in kK8sReleaseFile.
AppTemplate k8s_template(const K8sContext& ctx, NodeRole role);

inline constexpr std::string_view kK8sReleaseFile = "/etc/edgebench/k8s-release";

struct ClusterReady {
  Distro type = Distro::kVanilla;
  std::string version;
  std::string scheduler;
  std::string fabric;
  std::vector<NodeHandle> nodes;  // master first; joined nodes are k8s_ready
  std::vector<std::string> failed_joins;  // "<host>: <reason>"

  bool complete() const { return failed_joins.empty(); }
  std::vector<NodeHandle> ready_nodes() const;

  friend bool operator==(const ClusterReady&, const ClusterReady&) = default;
};

// Installs the control plane on `master` and joins each worker. A master
// failure throws ResourceError; worker failures are reported in
// failed_joins and leave the worker out of the ready set.
ClusterReady install_k8s(const NodeHandle& master,
                         std::span<const NodeHandle> workers,
                         const K8sSection& k8s, StepExecutor& executor);

}  // namespace edgebench

#endif  // EDGEBENCH_RESOURCE_H_
