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

// The experiment manager: turns a validated descriptor into a phase plan and
// drives it against a driver and a controller registry. Every run lives in
// its own directory:
//
//   <out>/runs/<run_id>/descriptor.canonical
//                       record.json      execution log, rewritten atomically
//                       results.csv      raw samples
//                       failures.json    missing samples and why
//                       metrics.json     statistics (no wall-clock fields)
//                       plots/*.svg
//                       report.tex, report.pdf (when compiled)

#ifndef EDGEBENCH_ORCHESTRATOR_H_
#define EDGEBENCH_ORCHESTRATOR_H_

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "edgebench/controllers.h"
#include "edgebench/descriptor.h"
#include "edgebench/infra.h"
#include "edgebench/resource.h"

namespace edgebench {

class OrchestratorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class PhaseKind {
  kAllocateNodes,
  kRestoreSnapshots,
  kInstallK8s,
  kJoinWorkers,
  kDeployApp,
  kRunExperiment,
  kProcessResults,
};

enum class PhaseStatus { kPending, kRunning, kSucceeded, kFailed, kSkipped };

std::string_view to_string(PhaseKind k);
std::string_view to_string(PhaseStatus s);
std::optional<PhaseKind> parse_phase_kind(std::string_view s);
std::optional<PhaseStatus> parse_phase_status(std::string_view s);

struct PhaseSpec {
  std::string id;  // unique: "allocate_nodes", "deploy_app:docker@all", ...
  PhaseKind kind = PhaseKind::kAllocateNodes;
  std::map<std::string, std::string> params;
  std::vector<std::string> depends_on;

  friend bool operator==(const PhaseSpec&, const PhaseSpec&) = default;
};

struct RunPlan {
  std::string run_id;
  std::uint64_t seed = 0;
  std::vector<PhaseSpec> phases;  // a topological order

  const PhaseSpec* find(std::string_view id) const;
  friend bool operator==(const RunPlan&, const RunPlan&) = default;
};

// `<title>-<YYYYmmddTHHMMSSZ>-<seed>`.
std::string make_run_id(std::string_view title,
                        std::chrono::system_clock::time_point at,
                        std::uint64_t seed);

// Pure: the same descriptor, seed and run id give the same plan. The seed
// defaults to descriptor_hash(d). Apps deploy in declaration order, one
// phase per (app, scope), so later apps may rely on earlier ones.
RunPlan plan_run(const ExperimentDescriptor& d, std::optional<std::uint64_t> seed,
                 std::string run_id = "");

struct PhaseAttempt {
  std::string started_at;
  std::string ended_at;
  PhaseStatus status = PhaseStatus::kRunning;
  std::string message;

  friend bool operator==(const PhaseAttempt&, const PhaseAttempt&) = default;
};

struct PhaseRecord {
  std::string id;
  PhaseKind kind = PhaseKind::kAllocateNodes;
  PhaseStatus status = PhaseStatus::kPending;
  std::vector<PhaseAttempt> attempts;
  std::vector<std::string> log;

  friend bool operator==(const PhaseRecord&, const PhaseRecord&) = default;
};

struct RecordEvent {
  std::string at;
  std::string phase;
  PhaseStatus status = PhaseStatus::kPending;

  friend bool operator==(const RecordEvent&, const RecordEvent&) = default;
};

struct RunRecord {
  std::string run_id;
  std::uint64_t seed = 0;
  std::string framework_version;
  std::string descriptor_hash;  // hex
  std::string driver;
  std::string created_at;
  std::vector<PhaseRecord> phases;  // plan order
  std::vector<RecordEvent> events;  // append-only status history
  std::vector<NodeHandle> nodes;
  std::optional<ClusterReady> cluster;
  std::map<std::string, std::string> artifacts;
  std::vector<std::string> warnings;

  const PhaseRecord* find(std::string_view id) const;
  // True when every phase succeeded.
  bool succeeded() const;

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

std::string record_to_json(const RunRecord& r);
// Throws OrchestratorError("corrupted record ...") on malformed input.
RunRecord record_from_json(std::string_view text);

using WallClock = std::function<std::chrono::system_clock::time_point()>;

struct EngineOptions {
  std::filesystem::path out_dir = ".";
  // Per-phase limit; defaults to 10 s for the simulated driver, 600 s
  // otherwise.
  std::optional<std::chrono::milliseconds> phase_timeout;
  // Stop cleanly after this phase succeeds, leaving the rest pending.
  std::string stop_after;
  // Test hook: abandon the run right after this phase is marked running, as
  // if the process had been killed.
  std::string crash_during;
  WallClock clock;  // defaults to the system clock
  std::function<void(std::string_view)> log;  // progress lines
};

std::filesystem::path run_dir(const std::filesystem::path& out_dir,
                              std::string_view run_id);

// Runs the plan. Never throws for phase failures: they are recorded and
// dependents skipped. Throws OrchestratorError when the run directory cannot
// be written or the descriptor fails validation.
RunRecord execute_run(const RunPlan& plan, const ExperimentDescriptor& d,
                      Driver& driver, const ControllerRegistry& controllers,
                      const AppCatalog& catalog, const EngineOptions& options);

// Continues a persisted run: succeeded phases are kept, failed, skipped,
// pending and interrupted (running) phases run again. Throws
// OrchestratorError for an unknown run id or a corrupted record.
RunRecord resume_run(std::string_view run_id, Driver& driver,
                     const ControllerRegistry& controllers,
                     const AppCatalog& catalog, const EngineOptions& options);

// Re-renders metrics.json, plots and report.tex from results.csv and
// failures.json of a finished experiment phase. Returns warnings.
std::vector<std::string> process_results(const std::filesystem::path& dir,
                                         const ExperimentDescriptor& d,
                                         const RunRecord& record);

}  // namespace edgebench

#endif  // EDGEBENCH_ORCHESTRATOR_H_
