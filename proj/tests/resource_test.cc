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


#include <algorithm>
#include <random>
#include <set>
#include <string>

#include <gtest/gtest.h>

#include "edgebench/infra.h"
#include "edgebench/resource.h"
#include "support/fixtures.h"

namespace edgebench {
namespace {

using testing::catalog;
using testing::fast_sim;

NodeHandle node(std::string host, NodeRole role) {
  return {.host = std::move(host), .ip = "10.0.0.1", .mac = "02:00:00:00:00:01",
          .role = role, .state = NodeState::kOsReady, .snapshot_id = std::nullopt};
}

K8sContext ctx() {
  K8sContext c;
  c.type = Distro::kVanilla;
  c.version = "1.23";
  c.scheduler = "swm";
  c.fabric = "l2s-m";
  c.master_host = "m1";
  c.master_ip = "10.0.0.1";
  return c;
}

std::vector<std::string> hosts(const std::vector<NodeHandle>& v) {
  std::vector<std::string> out;
  for (const auto& n : v) out.push_back(n.host);
  return out;
}

TEST(Scope, Resolution) {
  const std::vector<NodeHandle> c = {node("m1", NodeRole::kMaster), node("w1", NodeRole::kWorker),
                                     node("w2", NodeRole::kWorker)};
  EXPECT_EQ(hosts(resolve_scope(AppScope::kAll, c)),
            (std::vector<std::string>{"m1", "w1", "w2"}));
  EXPECT_EQ(hosts(resolve_scope(AppScope::kCluster, c)), std::vector<std::string>{"m1"});
  EXPECT_EQ(hosts(resolve_scope(AppScope::kMaster, c)), std::vector<std::string>{"m1"});
  EXPECT_EQ(hosts(resolve_scope(AppScope::kWorker, c)),
            (std::vector<std::string>{"w1", "w2"}));
  const std::vector<NodeHandle> single = {node("m1", NodeRole::kMaster)};
  EXPECT_TRUE(resolve_scope(AppScope::kWorker, single).empty());
}

TEST(Scope, MasterAndWorkerPartitionAll) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<NodeHandle> c;
    const int n = 1 + static_cast<int>(rng() % 8);
    for (int i = 0; i < n; ++i) {
      c.push_back(node("h" + std::to_string(i),
                       i == 0 || rng() % 3 == 0 ? NodeRole::kMaster : NodeRole::kWorker));
    }
    auto m = hosts(resolve_scope(AppScope::kMaster, c));
    auto w = hosts(resolve_scope(AppScope::kWorker, c));
    auto all = hosts(resolve_scope(AppScope::kAll, c));
    std::set<std::string> ms(m.begin(), m.end());
    for (const auto& h : w) EXPECT_FALSE(ms.contains(h));
    std::set<std::string> u(m.begin(), m.end());
    u.insert(w.begin(), w.end());
    EXPECT_EQ(u, std::set<std::string>(all.begin(), all.end()));
    EXPECT_EQ(m.size() + w.size(), all.size());
  }
}

TEST(Catalog, MinimumAppsPresent) {
  const auto names = catalog().names();
  for (const char* want : {"docker", "dashboard", "argo-workflows", "edgenet-prereqs",
                           "edgenet-features", "liqo", "submariner"}) {
    EXPECT_NE(std::find(names.begin(), names.end(), want), names.end()) << want;
  }
}

TEST(Catalog, DockerLatestStartsWithPackageInstall) {
  const AppTemplate t = render_template(catalog(), "docker", "latest", ctx());
  ASSERT_FALSE(t.steps.empty());
  EXPECT_EQ(t.version, catalog().find("docker")->versions.front());
  EXPECT_EQ(t.steps[0].kind, StepKind::kPackageInstall);
  EXPECT_EQ(t.steps[0].param("name"), "docker-ce");
  EXPECT_EQ(t.steps[0].param("version"), t.version);
  EXPECT_EQ(t.steps[0].expected_state, "docker-ce " + t.version + " installed");
}

TEST(Catalog, DashboardIsClusterScopedWithK8sApply) {
  const AppTemplate t = render_template(catalog(), "dashboard", "2.6.1", ctx());
  EXPECT_EQ(t.allowed_scopes, std::set<AppScope>{AppScope::kCluster});
  EXPECT_TRUE(std::any_of(t.steps.begin(), t.steps.end(),
                          [](const Step& s) { return s.kind == StepKind::kK8sApply; }));
}

TEST(Catalog, EdgenetPrereqStepOrder) {
  const AppTemplate t = render_template(catalog(), "edgenet-prereqs", "latest", ctx());
  std::vector<std::string> states;
  for (const auto& s : t.steps) states.push_back(s.expected_state);
  const std::vector<std::string> anchors = {"kubeconfig secret created", "ssh-key secret created",
                                            "wireguard configured",
                                            "VPN peering custom resource created"};
  std::size_t from = 0;
  for (const auto& a : anchors) {
    const auto it = std::find(states.begin() + static_cast<std::ptrdiff_t>(from), states.end(), a);
    ASSERT_NE(it, states.end()) << a;
    from = static_cast<std::size_t>(it - states.begin()) + 1;
  }
  // Placeholders resolved.
  EXPECT_EQ(t.steps.back().param("manifest"), "edgenet/vpnpeer-m1.yaml");
}

TEST(Catalog, RenderIsPureAndRejectsUnknowns) {
  EXPECT_EQ(render_template(catalog(), "argo-workflows", "latest", ctx()),
            render_template(catalog(), "argo-workflows", "latest", ctx()));
  EXPECT_THROW(render_template(catalog(), "nginx", "latest", ctx()), ResourceError);
  EXPECT_THROW(render_template(catalog(), "docker", "1.0", ctx()), ResourceError);
}

TEST(Catalog, EntryValidation) {
  EXPECT_THROW(AppCatalog::parse_entry(R"({"name": "x", "versions": ["1"],
      "allowed_scopes": ["all"], "steps": []})"),
               ResourceError);
  EXPECT_THROW(AppCatalog::parse_entry(R"({"name": "x", "versions": ["1"],
      "allowed_scopes": ["everywhere"], "steps": [{"kind": "command",
      "payload": {"cmd": "true"}, "expected_state": "ok"}]})"),
               ResourceError);
  EXPECT_THROW(AppCatalog::parse_entry(R"({"name": "x", "versions": ["1"],
      "allowed_scopes": ["all"], "steps": [{"kind": "reboot",
      "payload": {}, "expected_state": "ok"}]})"),
               ResourceError);
  AppCatalog c;
  c.add(AppCatalog::parse_entry(R"({"name": "x", "versions": ["1"],
      "allowed_scopes": ["all"], "steps": [{"kind": "command",
      "payload": {"cmd": "echo {{nope}}"}, "expected_state": "ok"}]})"));
  EXPECT_THROW(render_template(c, "x", "latest", ctx()), ResourceError);
  EXPECT_NO_THROW(c.add(*catalog().find("docker")));
  EXPECT_THROW(c.add(*catalog().find("docker")), ResourceError);
}

// Every catalog app, applied twice to a clean simulated node.
TEST(Deploy, EveryCatalogAppIsIdempotent) {
  for (const auto& name : catalog().names()) {
    SimulatedDriver drv(fast_sim());
    const std::vector<NodeRequest> req = {{{"m1", "10.0.0.1", "02:00:00:00:00:01"},
                                           NodeRole::kMaster}};
    const NodeHandle n = drv.allocate_nodes(req, "ubuntu-22-clean", true)[0];
    const AppTemplate t = render_template(catalog(), name, "latest", ctx());
    const StepOutcomes first = apply_steps(n, t, drv.executor());
    EXPECT_TRUE(first.all_changed()) << name;
    EXPECT_EQ(first.steps.size(), t.steps.size()) << name;
    EXPECT_EQ(drv.node("m1")->installed.at(name), t.version);
    const SimNode after_first = *drv.node("m1");
    const StepOutcomes second = apply_steps(n, t, drv.executor());
    EXPECT_TRUE(second.all_unchanged()) << name;
    EXPECT_EQ(second.steps.size(), t.steps.size()) << name;
    EXPECT_EQ(*drv.node("m1"), after_first) << name;
    drv.restore_snapshot(n);
    EXPECT_TRUE(drv.node("m1")->installed.empty()) << name;
  }
}

TEST(Deploy, FailingMiddleStepStopsAndLeavesNodeUntouched) {
  SimulatedDriver drv(fast_sim());
  const std::vector<NodeRequest> req = {{{"m1", "10.0.0.1", "02:00:00:00:00:01"},
                                         NodeRole::kMaster}};
  const NodeHandle n = drv.allocate_nodes(req, "ubuntu-22-clean", false)[0];
  const AppTemplate t = render_template(catalog(), "edgenet-prereqs", "latest", ctx());
  drv.inject_step_failure("m1", "wireguard configured");
  const SimNode before = *drv.node("m1");
  const StepOutcomes o = apply_steps(n, t, drv.executor());
  EXPECT_FALSE(o.ok());
  ASSERT_EQ(o.steps.size(), 3u);  // steps after the failure are not attempted
  EXPECT_EQ(o.steps[2].status, StepStatus::kFailed);
  EXPECT_NE(o.failure().find("step 2 (wireguard configured) failed on m1"), std::string::npos)
      << o.failure();
  EXPECT_EQ(*drv.node("m1"), before);
}

TEST(Deploy, NodeMustBeOsReady) {
  SimulatedDriver drv(fast_sim());
  NodeHandle n = node("m1", NodeRole::kMaster);
  n.state = NodeState::kAllocated;
  const AppTemplate t = render_template(catalog(), "docker", "latest", ctx());
  EXPECT_THROW(apply_steps(n, t, drv.executor()), ResourceError);
}

ClusterReady build(SimulatedDriver& drv, const K8sSection& k8s, int workers) {
  std::vector<NodeRequest> req = {{{"m1", "10.0.0.1", "02:00:00:00:00:01"}, NodeRole::kMaster}};
  for (int i = 0; i < workers; ++i) {
    req.push_back({{"w" + std::to_string(i), "10.0.0." + std::to_string(2 + i),
                    "02:00:00:00:00:0" + std::to_string(2 + i)},
                   NodeRole::kWorker});
  }
  const auto nodes = drv.allocate_nodes(req, "ubuntu-22-clean", false);
  return install_k8s(nodes[0], std::span(nodes).subspan(1), k8s, drv.executor());
}

TEST(K8s, Fig1TupleRecordedOnEveryNode) {
  SimulatedDriver drv(fast_sim());
  const ExperimentDescriptor d = testing::fig1();
  const ClusterReady c = build(drv, d.k8s, 2);
  EXPECT_TRUE(c.complete());
  EXPECT_EQ(c.ready_nodes().size(), 3u);
  EXPECT_EQ(c.fabric, "l2s-m");
  for (const char* h : {"m1", "w0", "w1"}) {
    const std::string rel = drv.node(h)->files.at(std::string(kK8sReleaseFile));
    EXPECT_EQ(rel, "type=vanilla;version=1.23;fabric=l2s-m;scheduler=swm") << h;
    EXPECT_EQ(drv.node(h)->installed.at("k8s"), "1.23");
  }
  EXPECT_TRUE(drv.node("m1")->k8s_objects.contains("kube-system/cni/l2s-m.yaml"));
  EXPECT_TRUE(drv.node("m1")->k8s_objects.contains("kube-system/scheduler/swm.yaml"));
}

TEST(K8s, ZeroWorkersIsASingleNodeCluster) {
  SimulatedDriver drv(fast_sim());
  K8sSection k8s;
  k8s.networkfabric = "flannel";
  const ClusterReady c = build(drv, k8s, 0);
  EXPECT_TRUE(c.complete());
  ASSERT_EQ(c.nodes.size(), 1u);
  EXPECT_EQ(c.nodes[0].role, NodeRole::kMaster);
}

TEST(K8s, K3sCiliumFabric) {
  SimulatedDriver drv(fast_sim());
  K8sSection k8s;
  k8s.type = Distro::kK3s;
  k8s.version = "1.27";
  k8s.networkfabric = "cilium";
  const ClusterReady c = build(drv, k8s, 1);
  EXPECT_EQ(c.fabric, "cilium");
  EXPECT_EQ(c.type, Distro::kK3s);
  EXPECT_EQ(drv.node("w0")->packages.count("k3s"), 1u);
}

TEST(K8s, WorkerJoinFailureGivesPartialCluster) {
  SimulatedDriver drv(fast_sim());
  drv.inject_step_failure("w1", "joined m1");
  K8sSection k8s;
  k8s.networkfabric = "calico";
  const ClusterReady c = build(drv, k8s, 2);
  EXPECT_FALSE(c.complete());
  ASSERT_EQ(c.failed_joins.size(), 1u);
  EXPECT_TRUE(c.failed_joins[0].starts_with("w1: "));
  EXPECT_EQ(c.ready_nodes().size(), 2u);
}

TEST(K8s, MasterFailureThrows) {
  SimulatedDriver drv(fast_sim());
  drv.inject_step_failure("m1", "control plane initialized");
  K8sSection k8s;
  k8s.networkfabric = "calico";
  EXPECT_THROW(build(drv, k8s, 1), ResourceError);
}

}  // namespace
}  // namespace edgebench
