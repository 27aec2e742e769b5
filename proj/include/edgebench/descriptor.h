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

// Experiment descriptor: a line-oriented `key=value` file that declares the
// infrastructure, Kubernetes flavour, applications and experiment of a run.
//
//   # comment
//   experiment_title="my_experiment"
//   use_snapshots=true
//   master_ips=["83.212.134.27"]
//
// Values are bare tokens, double-quoted strings (with \" and \\ escapes) or
// bracketed lists of quoted strings. `#` outside quotes starts a comment.

#ifndef EDGEBENCH_DESCRIPTOR_H_
#define EDGEBENCH_DESCRIPTOR_H_

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "edgebench/compat.h"
#include "edgebench/secret.h"

namespace edgebench {

enum class ResultsOutput { kPdf, kTex, kNone };

std::string_view to_string(ResultsOutput r);
std::optional<ResultsOutput> parse_results_output(std::string_view s);

struct NodeSpec {
  std::string host;
  std::string ip;
  std::string mac;

  friend bool operator==(const NodeSpec&, const NodeSpec&) = default;
};

// `*_hosts`, `*_ips` and `*_macs` as declared, positionally paired. Lengths
// may disagree after parsing; validate() reports that.
struct NodeGroup {
  std::vector<std::string> hosts;
  std::vector<std::string> ips;
  std::vector<std::string> macs;

  bool consistent() const {
    return hosts.size() == ips.size() && hosts.size() == macs.size();
  }
  // Pairs up to the shortest list.
  std::vector<NodeSpec> nodes() const;

  friend bool operator==(const NodeGroup&, const NodeGroup&) = default;
};

struct InfraSection {
  std::string manager_ip;
  std::string manager_name;
  std::string manager_type;  // driver id: xcp-ng, simulated, shell, ...
  bool use_snapshots = false;
  std::string node_osimage;

  friend bool operator==(const InfraSection&, const InfraSection&) = default;
};

struct K8sSection {
  Distro type = Distro::kVanilla;
  std::string scheduler = "default-scheduler";
  std::string networkfabric;
  std::string version = "latest";

  friend bool operator==(const K8sSection&, const K8sSection&) = default;
};

struct AppRequest {
  std::string name;
  std::string version;
  AppScope scope = AppScope::kAll;

  friend bool operator==(const AppRequest&, const AppRequest&) = default;
};

struct AppSection {
  std::vector<std::string> names;  // `name` or `name@version`
  std::vector<AppScope> scopes;

  // Pairs up to the shorter list; version defaults to "latest".
  std::vector<AppRequest> requests() const;

  friend bool operator==(const AppSection&, const AppSection&) = default;
};

struct ExpSection {
  std::string manager;  // controller id
  std::vector<std::string> inputs;
  std::vector<std::string> metrics;
  std::int64_t replications = 1;
  ResultsOutput results_output = ResultsOutput::kTex;
  // `exp_options=["interval_ms=2", ...]`, controller-specific knobs.
  std::vector<std::pair<std::string, std::string>> options;

  friend bool operator==(const ExpSection&, const ExpSection&) = default;
};

struct ExperimentDescriptor {
  std::string experiment_title;
  std::string username;
  Secret password;
  InfraSection infra;
  NodeGroup masters;
  NodeGroup workers;
  K8sSection k8s;
  AppSection apps;
  ExpSection experiment;
  // Unrecognized keys, kept verbatim (raw value text) in file order.
  std::vector<std::pair<std::string, std::string>> extras;

  friend bool operator==(const ExperimentDescriptor&,
                         const ExperimentDescriptor&) = default;
};

struct Finding {
  std::string path;
  std::string message;

  friend bool operator==(const Finding&, const Finding&) = default;
};

struct ValidationReport {
  std::vector<Finding> errors;
  std::vector<Finding> warnings;

  bool ok() const { return errors.empty(); }
};

class DescriptorError : public std::runtime_error {
 public:
  DescriptorError(int line, std::string key, const std::string& message);

  int line() const { return line_; }  // 0 when not tied to a line
  const std::string& key() const { return key_; }

 private:
  int line_;
  std::string key_;
};

// Throws DescriptorError on syntax errors, duplicate keys, type mismatches
// and missing required keys. Unknown keys and undecodable passwords are
// reported through `warnings` when non-null.
ExperimentDescriptor parse_descriptor(std::string_view text,
                                      std::vector<Finding>* warnings = nullptr);

// Canonical form: known keys in the reference order, strings quoted,
// unknown keys appended verbatim. parse(serialize(d)) == d.
std::string serialize_descriptor(const ExperimentDescriptor& d);

// Pure. Structural invariants, the distro x fabric matrix, controller ids,
// metrics and inputs, and (when the catalog has an app list) app names and
// scopes.
ValidationReport validate(const ExperimentDescriptor& d,
                          const CompatibilityCatalog& catalog);

bool is_valid_mac(std::string_view mac);
bool is_valid_ipv4(std::string_view ip);

// FNV-1a over the canonical serialization.
std::uint64_t descriptor_hash(const ExperimentDescriptor& d);

}  // namespace edgebench

#endif  // EDGEBENCH_DESCRIPTOR_H_
