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

#include "edgebench/compat.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <utility>

namespace edgebench {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

constexpr std::array<std::pair<std::string_view, std::string_view>, 8>
    kFabricAliases = {{
        {"l2sm", "l2s-m"},
        {"l2sm-v1", "l2s-m"},
        {"l2s-m-v1", "l2s-m"},
        {"weave", "weavenet"},
        {"weave-net", "weavenet"},
        {"kuberouter", "kube-router"},
        {"kubeovn", "kube-ovn"},
        {"multus-cni", "multus"},
    }};

}  // namespace

std::string_view to_string(Distro d) {
  switch (d) {
    case Distro::kVanilla:
      return "vanilla";
    case Distro::kK3s:
      return "k3s";
    case Distro::kK0s:
      return "k0s";
    case Distro::kMicroK8s:
      return "microk8s";
    case Distro::kEdgeNet:
      return "edgenet";
  }
  return "unknown";
}

std::optional<Distro> parse_distro(std::string_view s) {
  const std::string v = lower(s);
  if (v == "vanilla" || v == "k8s" || v == "kubernetes") return Distro::kVanilla;
  if (v == "k3s") return Distro::kK3s;
  if (v == "k0s") return Distro::kK0s;
  if (v == "microk8s") return Distro::kMicroK8s;
  if (v == "edgenet") return Distro::kEdgeNet;
  return std::nullopt;
}

const std::vector<Distro>& all_distros() {
  static const std::vector<Distro> kAll = {Distro::kVanilla, Distro::kK3s,
                                           Distro::kK0s, Distro::kMicroK8s,
                                           Distro::kEdgeNet};
  return kAll;
}

std::string_view to_string(AppScope s) {
  switch (s) {
    case AppScope::kAll:
      return "all";
    case AppScope::kCluster:
      return "cluster";
    case AppScope::kMaster:
      return "master";
    case AppScope::kWorker:
      return "worker";
  }
  return "unknown";
}

std::optional<AppScope> parse_scope(std::string_view s) {
  const std::string v = lower(s);
  if (v == "all") return AppScope::kAll;
  if (v == "cluster") return AppScope::kCluster;
  if (v == "master" || v == "masters") return AppScope::kMaster;
  if (v == "worker" || v == "workers") return AppScope::kWorker;
  return std::nullopt;
}

std::string canonical_fabric(std::string_view fabric) {
  std::string v = lower(fabric);
  for (const auto& [alias, canonical] : kFabricAliases) {
    if (v == alias) return std::string(canonical);
  }
  return v;
}

std::optional<CniTarget> parse_cni_input(std::string_view input) {
  const std::string v = lower(input);
  constexpr std::string_view kEdgeNetPrefix = "k8s-edgenet-";
  if (v.starts_with(kEdgeNetPrefix)) {
    const std::string rest = v.substr(kEdgeNetPrefix.size());
    if (rest.empty()) return std::nullopt;
    return CniTarget{Distro::kEdgeNet, canonical_fabric(rest)};
  }
  const auto dash = v.find('-');
  if (dash == std::string::npos || dash == 0 || dash + 1 == v.size()) {
    return std::nullopt;
  }
  const auto distro = parse_distro(std::string_view(v).substr(0, dash));
  if (!distro) return std::nullopt;
  return CniTarget{*distro, canonical_fabric(v.substr(dash + 1))};
}

std::string cni_input_label(const CniTarget& target) {
  switch (target.distro) {
    case Distro::kVanilla:
      return "k8s-" + target.fabric;
    case Distro::kEdgeNet:
      return "k8s-edgenet-" + target.fabric;
    default:
      return std::string(to_string(target.distro)) + "-" + target.fabric;
  }
}

CompatibilityCatalog CompatibilityCatalog::builtin() {
  CompatibilityCatalog c;
  c.matrix_[Distro::kVanilla] = {"flannel",     "multus",   "calico",
                                 "weavenet",    "cilium",   "kube-router",
                                 "kube-ovn",    "antrea",   "l2s-m"};
  c.matrix_[Distro::kK3s] = {"flannel", "calico", "cilium"};
  c.matrix_[Distro::kK0s] = {"kube-router", "calico"};
  c.matrix_[Distro::kMicroK8s] = {"calico", "flannel", "kube-ovn"};
  c.matrix_[Distro::kEdgeNet] = {"antrea"};

  c.controllers_.push_back(ControllerInfo{
      .id = std::string(kAdControllerId),
      .description =
          "client/server anomaly detection over a piecewise-Gaussian stream",
      .metrics = {"detection_gap_points", "detection_gap_ms",
                  "response_time_ms", "cpu_percent", "ram_mb"},
      .input_kind = InputKind::kDetectorId,
      .allowed_inputs = {"tcusum", "rt-cusum", "pcusum", "rbocp",
                         "offline-cusum"},
  });
  c.controllers_.push_back(ControllerInfo{
      .id = std::string(kCniControllerId),
      .description = "CNI plugin benchmark over idle, pod-to-pod and "
                     "pod-to-service conditions",
      .metrics = {"cpu", "ram", "throughput", "latency"},
      .input_kind = InputKind::kCniTarget,
      .allowed_inputs = {},
  });
  c.infra_types_ = {"shell", "simulated", "xcp-ng"};
  return c;
}

bool CompatibilityCatalog::supports(Distro distro,
                                    std::string_view fabric) const {
  const auto& list = fabrics(distro);
  const std::string f = canonical_fabric(fabric);
  return std::find(list.begin(), list.end(), f) != list.end();
}

const std::vector<std::string>& CompatibilityCatalog::fabrics(
    Distro distro) const {
  static const std::vector<std::string> kEmpty;
  const auto it = matrix_.find(distro);
  return it == matrix_.end() ? kEmpty : it->second;
}

std::vector<std::string> CompatibilityCatalog::known_fabrics() const {
  std::set<std::string> all;
  for (const auto& [_, list] : matrix_) all.insert(list.begin(), list.end());
  return {all.begin(), all.end()};
}

const ControllerInfo* CompatibilityCatalog::find_controller(
    std::string_view id) const {
  for (const auto& c : controllers_) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

std::vector<std::string> CompatibilityCatalog::controller_ids() const {
  std::vector<std::string> ids;
  for (const auto& c : controllers_) ids.push_back(c.id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

bool CompatibilityCatalog::knows_infra_type(std::string_view type) const {
  return std::find(infra_types_.begin(), infra_types_.end(), type) !=
         infra_types_.end();
}

CompatibilityCatalog& CompatibilityCatalog::with_apps(
    std::map<std::string, std::set<AppScope>, std::less<>> apps) {
  apps_ = std::move(apps);
  return *this;
}

const std::set<AppScope>* CompatibilityCatalog::find_app(
    std::string_view name) const {
  const auto it = apps_.find(name);
  return it == apps_.end() ? nullptr : &it->second;
}

}  // namespace edgebench
