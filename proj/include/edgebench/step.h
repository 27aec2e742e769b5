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

#ifndef EDGEBENCH_STEP_H_
#define EDGEBENCH_STEP_H_

#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace edgebench {

struct NodeHandle;

enum class StepKind {
  kPackageInstall,
  kFileWrite,
  kCommand,
  kServiceEnable,
  kK8sApply,
};

std::string_view to_string(StepKind k);
std::optional<StepKind> parse_step_kind(std::string_view s);

// One playbook-style task. Payload keys by kind:
//   package_install: name, version
//   file_write:      path, content
//   command:         cmd, creates (marker that makes re-runs a no-op)
//   service_enable:  name
//   k8s_apply:       manifest, namespace
struct Step {
  StepKind kind = StepKind::kCommand;
  std::map<std::string, std::string> payload;
  std::string expected_state;

  std::string param(const std::string& key) const {
    const auto it = payload.find(key);
    return it == payload.end() ? std::string() : it->second;
  }

  friend bool operator==(const Step&, const Step&) = default;
};

enum class StepStatus { kChanged, kUnchanged, kFailed };

std::string_view to_string(StepStatus s);

struct StepResult {
  StepStatus status = StepStatus::kUnchanged;
  std::string output;
};

// Applies steps to one node. apply() calls for an app are bracketed by
// begin() and commit()/rollback(); an executor may stage effects between
// them. Calls for different nodes may interleave across threads.
class StepExecutor {
 public:
  virtual ~StepExecutor() = default;

  virtual void begin(const NodeHandle& node) = 0;
  virtual StepResult apply(const NodeHandle& node, const Step& step) = 0;
  virtual void commit(const NodeHandle& node, std::string_view app,
                      std::string_view version) = 0;
  virtual void rollback(const NodeHandle& node) = 0;
};

}  // namespace edgebench

#endif  // EDGEBENCH_STEP_H_
