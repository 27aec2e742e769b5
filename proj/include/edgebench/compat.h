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

// Distribution x network fabric support matrix and the registry of
// controller ids, metrics and apps that descriptor validation checks against.

#ifndef EDGEBENCH_COMPAT_H_
#define EDGEBENCH_COMPAT_H_

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace edgebench {

enum class Distro { kVanilla, kK3s, kK0s, kMicroK8s, kEdgeNet };

enum class AppScope { kAll, kCluster, kMaster, kWorker };

std::string_view to_string(Distro d);
std::optional<Distro> parse_distro(std::string_view s);
const std::vector<Distro>& all_distros();

std::string_view to_string(AppScope s);
std::optional<AppScope> parse_scope(std::string_view s);

// One benchmark target of the CNI controller, written `<distro>-<plugin>`
// in descriptors, e.g. "k8s-flannel", "k3s-calico", "k8s-l2sm-v1",
// "k8s-edgenet-antrea".
struct CniTarget {
  Distro distro;
  std::string fabric;

  friend bool operator==(const CniTarget&, const CniTarget&) = default;
};

std::optional<CniTarget> parse_cni_input(std::string_view input);
std::string cni_input_label(const CniTarget& target);

// Maps spelling variants ("l2sm", "l2sm-v1", "weave") to the canonical
// fabric id. Unknown ids are returned lowercased.
std::string canonical_fabric(std::string_view fabric);

enum class InputKind { kCniTarget, kDetectorId };

struct ControllerInfo {
  std::string id;
  std::string description;
  std::vector<std::string> metrics;
  InputKind input_kind = InputKind::kCniTarget;
  std::vector<std::string> allowed_inputs;  // kDetectorId only
};

class CompatibilityCatalog {
 public:
  // The built-in matrix, controllers and infrastructure manager types. No
  // app list: app checks are skipped until with_apps() is called.
  static CompatibilityCatalog builtin();

  bool supports(Distro distro, std::string_view fabric) const;
  const std::vector<std::string>& fabrics(Distro distro) const;
  // Every fabric id that appears anywhere in the matrix.
  std::vector<std::string> known_fabrics() const;

  const ControllerInfo* find_controller(std::string_view id) const;
  std::vector<std::string> controller_ids() const;

  bool knows_infra_type(std::string_view type) const;
  const std::vector<std::string>& infra_types() const { return infra_types_; }

  CompatibilityCatalog& with_apps(
      std::map<std::string, std::set<AppScope>, std::less<>> apps);
  bool has_app_list() const { return !apps_.empty(); }
  const std::set<AppScope>* find_app(std::string_view name) const;
  const std::map<std::string, std::set<AppScope>, std::less<>>& apps() const {
    return apps_;
  }

 private:
  std::map<Distro, std::vector<std::string>> matrix_;
  std::vector<ControllerInfo> controllers_;
  std::vector<std::string> infra_types_;
  std::map<std::string, std::set<AppScope>, std::less<>> apps_;
};

inline constexpr std::string_view kCniControllerId = "cni-plugins";
inline constexpr std::string_view kAdControllerId = "anomaly-detection";

}  // namespace edgebench

#endif  // EDGEBENCH_COMPAT_H_
