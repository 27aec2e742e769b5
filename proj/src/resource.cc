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

#include "edgebench/resource.h"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <fmt/core.h>
#include <fmt/ranges.h>

#include "json.hpp"

namespace edgebench {
namespace {

using Vars = std::map<std::string, std::string, std::less<>>;

std::string substitute(std::string_view text, const Vars& vars,
                       std::string_view app) {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t open = text.find("{{", pos);
    if (open == std::string_view::npos) break;
    const std::size_t close = text.find("}}", open + 2);
    if (close == std::string_view::npos) {
      throw ResourceError(
          fmt::format("app {}: unterminated placeholder in '{}'", app, text));
    }
    out.append(text.substr(pos, open - pos));
    const std::string_view key = text.substr(open + 2, close - open - 2);
    const auto it = vars.find(key);
    if (it == vars.end()) {
      throw ResourceError(
          fmt::format("app {}: unknown placeholder {{{{{}}}}}", app, key));
    }
    out += it->second;
    pos = close + 2;
  }
  out.append(text.substr(pos));
  return out;
}

Step render_step(const Step& raw, const Vars& vars, std::string_view app) {
  Step s;
  s.kind = raw.kind;
  for (const auto& [k, v] : raw.payload) s.payload[k] = substitute(v, vars, app);
  s.expected_state = substitute(raw.expected_state, vars, app);
  return s;
}

std::string_view k8s_package(Distro d) {
  switch (d) {
    case Distro::kVanilla:
    case Distro::kEdgeNet:
      return "kubeadm";
    case Distro::kK3s:
      return "k3s";
    case Distro::kK0s:
      return "k0s";
    case Distro::kMicroK8s:
      return "microk8s";
  }
  return "kubeadm";
}

std::string init_command(const K8sContext& c) {
  switch (c.type) {
    case Distro::kVanilla:
    case Distro::kEdgeNet:
      return fmt::format(
          "kubeadm init --kubernetes-version {} --apiserver-advertise-address {}",
          c.version, c.master_ip);
    case Distro::kK3s:
      return fmt::format(
          "k3s server --node-ip {} --flannel-backend {}", c.master_ip,
          c.fabric == "flannel" ? "vxlan" : "none");
    case Distro::kK0s:
      return "k0s install controller --enable-worker && k0s start";
    case Distro::kMicroK8s:
      return "microk8s start";
  }
  return {};
}

std::string join_command(const K8sContext& c) {
  switch (c.type) {
    case Distro::kVanilla:
    case Distro::kEdgeNet:
      return fmt::format("kubeadm join {}:6443", c.master_ip);
    case Distro::kK3s:
      return fmt::format("k3s agent --server https://{}:6443", c.master_ip);
    case Distro::kK0s:
      return "k0s install worker && k0s start";
    case Distro::kMicroK8s:
      return fmt::format("microk8s join {}:25000", c.master_ip);
  }
  return {};
}

}  // namespace

K8sContext make_k8s_context(const K8sSection& k8s,
                            std::span<const NodeHandle> cluster) {
  K8sContext c;
  c.type = k8s.type;
  c.version = k8s.version;
  c.scheduler = k8s.scheduler;
  c.fabric = canonical_fabric(k8s.networkfabric);
  const auto masters = resolve_scope(AppScope::kCluster, cluster);
  if (!masters.empty()) {
    c.master_host = masters.front().host;
    c.master_ip = masters.front().ip;
  }
  return c;
}

CatalogEntry AppCatalog::parse_entry(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ResourceError(fmt::format("catalog entry is not JSON: {}", e.what()));
  }
  CatalogEntry e;
  try {
    e.name = j.at("name").get<std::string>();
    e.description = j.value("description", std::string());
    e.versions = j.at("versions").get<std::vector<std::string>>();
    for (const auto& s : j.at("allowed_scopes")) {
      const auto scope = parse_scope(s.get<std::string>());
      if (!scope) {
        throw ResourceError(fmt::format("app {}: unknown scope '{}'", e.name,
                                        s.get<std::string>()));
      }
      e.allowed_scopes.insert(*scope);
    }
    for (const auto& js : j.at("steps")) {
      Step s;
      const auto kind = parse_step_kind(js.at("kind").get<std::string>());
      if (!kind) {
        throw ResourceError(fmt::format("app {}: unknown step kind '{}'",
                                        e.name,
                                        js.at("kind").get<std::string>()));
      }
      s.kind = *kind;
      s.payload = js.value("payload", std::map<std::string, std::string>{});
      s.expected_state = js.at("expected_state").get<std::string>();
      e.steps.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw ResourceError(fmt::format("catalog entry '{}': {}", e.name, ex.what()));
  }
  if (e.name.empty()) throw ResourceError("catalog entry without a name");
  if (e.versions.empty()) {
    throw ResourceError(fmt::format("app {}: no versions", e.name));
  }
  if (e.steps.empty()) throw ResourceError(fmt::format("app {}: no steps", e.name));
  if (e.allowed_scopes.empty()) {
    throw ResourceError(fmt::format("app {}: no allowed scopes", e.name));
  }
  return e;
}

AppCatalog AppCatalog::load_dir(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) {
    throw ResourceError(fmt::format("catalog directory {} not found",
                                    dir.string()));
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  AppCatalog catalog;
  for (const auto& f : files) {
    std::ifstream in(f);
    std::stringstream ss;
    ss << in.rdbuf();
    try {
      catalog.add(parse_entry(ss.str()));
    } catch (const ResourceError& e) {
      throw ResourceError(fmt::format("{}: {}", f.filename().string(), e.what()));
    }
  }
  return catalog;
}

void AppCatalog::add(CatalogEntry entry) {
  const std::string name = entry.name;
  if (!entries_.emplace(name, std::move(entry)).second) {
    throw ResourceError(fmt::format("duplicate catalog app {}", name));
  }
}

const CatalogEntry* AppCatalog::find(std::string_view name) const {
  const auto it = entries_.find(name);
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<std::string> AppCatalog::names() const {
  std::vector<std::string> out;
  for (const auto& [name, e] : entries_) out.push_back(name);
  return out;
}

std::map<std::string, std::set<AppScope>, std::less<>> AppCatalog::scopes()
    const {
  std::map<std::string, std::set<AppScope>, std::less<>> out;
  for (const auto& [name, e] : entries_) out[name] = e.allowed_scopes;
  return out;
}

AppTemplate render_template(const AppCatalog& catalog, std::string_view name,
                            std::string_view version, const K8sContext& ctx) {
  const CatalogEntry* e = catalog.find(name);
  if (e == nullptr) {
    throw ResourceError(fmt::format("unknown app '{}' (available: {})", name,
                                    fmt::join(catalog.names(), ", ")));
  }
  std::string resolved(version);
  if (resolved.empty() || resolved == "latest") {
    resolved = e->versions.front();
  } else if (std::find(e->versions.begin(), e->versions.end(), resolved) ==
             e->versions.end()) {
    throw ResourceError(fmt::format("app {} has no version {} (available: {})",
                                    name, resolved, fmt::join(e->versions, ", ")));
  }
  const Vars vars = {
      {"version", resolved},
      {"app", e->name},
      {"k8s_type", std::string(to_string(ctx.type))},
      {"k8s_version", ctx.version},
      {"fabric", ctx.fabric},
      {"scheduler", ctx.scheduler},
      {"master_host", ctx.master_host},
      {"master_ip", ctx.master_ip},
  };
  AppTemplate t;
  t.name = e->name;
  t.version = resolved;
  t.allowed_scopes = e->allowed_scopes;
  for (const auto& raw : e->steps) t.steps.push_back(render_step(raw, vars, name));
  return t;
}

std::vector<NodeHandle> resolve_scope(AppScope scope,
                                      std::span<const NodeHandle> cluster) {
  std::vector<NodeHandle> out;
  for (const auto& n : cluster) {
    const bool take = scope == AppScope::kAll ||
                      (scope == AppScope::kMaster && n.role == NodeRole::kMaster) ||
                      (scope == AppScope::kWorker && n.role == NodeRole::kWorker) ||
                      (scope == AppScope::kCluster && n.role == NodeRole::kMaster);
    if (take) {
      out.push_back(n);
      if (scope == AppScope::kCluster) break;
    }
  }
  return out;
}

bool StepOutcomes::ok() const {
  return std::none_of(steps.begin(), steps.end(), [](const StepOutcome& s) {
    return s.status == StepStatus::kFailed;
  });
}

bool StepOutcomes::all_changed() const {
  return std::all_of(steps.begin(), steps.end(), [](const StepOutcome& s) {
    return s.status == StepStatus::kChanged;
  });
}

bool StepOutcomes::all_unchanged() const {
  return std::all_of(steps.begin(), steps.end(), [](const StepOutcome& s) {
    return s.status == StepStatus::kUnchanged;
  });
}

std::string StepOutcomes::failure() const {
  for (const auto& s : steps) {
    if (s.status == StepStatus::kFailed) {
      return fmt::format("step {} ({}) failed on {}: {}", s.index,
                         s.expected_state, host, s.output);
    }
  }
  return {};
}

StepOutcomes apply_steps(const NodeHandle& node, const AppTemplate& tmpl,
                         StepExecutor& executor) {
  if (node.state == NodeState::kAllocated || node.state == NodeState::kReleased) {
    throw ResourceError(fmt::format("node {} is {}, not ready for deployment",
                                    node.host, to_string(node.state)));
  }
  StepOutcomes out;
  out.host = node.host;
  out.app = tmpl.name;
  out.version = tmpl.version;
  executor.begin(node);
  try {
    for (std::size_t i = 0; i < tmpl.steps.size(); ++i) {
      const Step& step = tmpl.steps[i];
      const StepResult r = executor.apply(node, step);
      out.steps.push_back({i, step.kind, step.expected_state, r.status, r.output});
      if (r.status == StepStatus::kFailed) {
        executor.rollback(node);
        return out;
      }
    }
  } catch (...) {
    executor.rollback(node);
    throw;
  }
  executor.commit(node, tmpl.name, tmpl.version);
  return out;
}

AppTemplate k8s_template(const K8sContext& ctx, NodeRole role) {
  const std::string pkg(k8s_package(ctx.type));
  const std::string release =
      fmt::format("type={};version={};fabric={};scheduler={}",
                  to_string(ctx.type), ctx.version, ctx.fabric, ctx.scheduler);
  AppTemplate t;
  t.name = "k8s";
  t.version = ctx.version;
  t.allowed_scopes = {role == NodeRole::kMaster ? AppScope::kMaster
                                                 : AppScope::kWorker};
  t.steps.push_back({StepKind::kPackageInstall,
                     {{"name", pkg}, {"version", ctx.version}},
                     fmt::format("{} {} installed", pkg, ctx.version)});
  t.steps.push_back({StepKind::kFileWrite,
                     {{"path", std::string(kK8sReleaseFile)}, {"content", release}},
                     "k8s release recorded"});
  if (role == NodeRole::kMaster) {
    t.steps.push_back({StepKind::kCommand,
                       {{"cmd", init_command(ctx)},
                        {"creates", "/etc/edgebench/k8s-control-plane"}},
                       "control plane initialized"});
    t.steps.push_back(
        {StepKind::kK8sApply,
         {{"manifest", fmt::format("cni/{}.yaml", ctx.fabric)},
          {"namespace", "kube-system"}},
         fmt::format("{} network fabric applied", ctx.fabric)});
    if (!ctx.scheduler.empty() && ctx.scheduler != "default-scheduler") {
      t.steps.push_back(
          {StepKind::kK8sApply,
           {{"manifest", fmt::format("scheduler/{}.yaml", ctx.scheduler)},
            {"namespace", "kube-system"}},
           fmt::format("scheduler {} deployed", ctx.scheduler)});
    }
    t.steps.push_back({StepKind::kServiceEnable,
                       {{"name", pkg == "kubeadm" ? "kubelet" : pkg}},
                       "control plane service enabled"});
  } else {
    t.steps.push_back({StepKind::kCommand,
                       {{"cmd", join_command(ctx)},
                        {"creates", "/etc/edgebench/k8s-joined"}},
                       fmt::format("joined {}", ctx.master_host)});
    t.steps.push_back({StepKind::kServiceEnable,
                       {{"name", pkg == "kubeadm" ? "kubelet" : pkg}},
                       "node service enabled"});
  }
  return t;
}

std::vector<NodeHandle> ClusterReady::ready_nodes() const {
  std::vector<NodeHandle> out;
  for (const auto& n : nodes) {
    if (n.state == NodeState::kK8sReady) out.push_back(n);
  }
  return out;
}

ClusterReady install_k8s(const NodeHandle& master,
                         std::span<const NodeHandle> workers,
                         const K8sSection& k8s, StepExecutor& executor) {
  const std::vector<NodeHandle> head = {master};
  const K8sContext ctx = make_k8s_context(k8s, head);
  ClusterReady cluster;
  cluster.type = ctx.type;
  cluster.version = ctx.version;
  cluster.scheduler = ctx.scheduler;
  cluster.fabric = ctx.fabric;

  const StepOutcomes m = apply_steps(master, k8s_template(ctx, NodeRole::kMaster),
                                     executor);
  if (!m.ok()) throw ResourceError(m.failure());
  cluster.nodes.push_back(master.with_state(NodeState::kK8sReady));

  for (const auto& w : workers) {
    const StepOutcomes r = apply_steps(w, k8s_template(ctx, NodeRole::kWorker),
                                       executor);
    if (r.ok()) {
      cluster.nodes.push_back(w.with_state(NodeState::kK8sReady));
    } else {
      cluster.nodes.push_back(w);
      cluster.failed_joins.push_back(fmt::format("{}: {}", w.host, r.failure()));
    }
  }
  return cluster;
}

}  // namespace edgebench
