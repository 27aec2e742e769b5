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
#include <atomic>
#include <chrono>
#include <filesystem>
#include <set>
#include <string>
#include <thread>

#include <gtest/gtest.h>

#include "edgebench/orchestrator.h"
#include "edgebench/results.h"
#include "support/fixtures.h"

namespace edgebench {
namespace {

namespace fs = std::filesystem;
using testing::catalog;
using testing::engine_options;
using testing::fast_sim;
using testing::fig1;
using testing::fig1_text;
using testing::run_fig1;
using testing::TempDir;
using testing::with_line;

std::vector<std::string> phase_ids(const RunPlan& p) {
  std::vector<std::string> out;
  for (const auto& s : p.phases) out.push_back(s.id);
  return out;
}

std::string file(const fs::path& dir, const std::string& rel) {
  return read_file(dir / rel);
}

// Controller stand-ins registered under the CNI controller id.
class ThrowingController final : public Controller {
 public:
  std::string id() const override { return std::string(kCniControllerId); }
  ControllerResult run(const ControllerRequest&, std::stop_token) override {
    throw ControllerError("probe pod never became ready");
  }
};

class StallingController final : public Controller {
 public:
  std::string id() const override { return std::string(kCniControllerId); }
  ControllerResult run(const ControllerRequest&, std::stop_token stop) override {
    while (!stop.stop_requested()) std::this_thread::sleep_for(std::chrono::milliseconds(5));
    throw ControllerError("cancelled");
  }
};

ControllerRegistry registry_with(std::unique_ptr<Controller> c) {
  ControllerRegistry r;
  r.add(std::move(c));
  return r;
}

// Fails the first allocation with a transient error.
class FlakyDriver final : public Driver {
 public:
  explicit FlakyDriver(int failures) : inner_(fast_sim(1)), failures_(failures) {}
  std::string id() const override { return inner_.id(); }
  DriverCapabilities capabilities() const override { return inner_.capabilities(); }
  std::vector<NodeHandle> allocate_nodes(std::span<const NodeRequest> spec,
                                         std::string_view image, bool snaps) override {
    ++calls;
    if (failures_-- > 0) throw InfraError(InfraError::Kind::kTransient, "hypervisor busy");
    return inner_.allocate_nodes(spec, image, snaps);
  }
  NodeHandle restore_snapshot(const NodeHandle& n) override {
    return inner_.restore_snapshot(n);
  }
  std::vector<std::string> release(std::span<const NodeHandle> n) override {
    return inner_.release(n);
  }
  void adopt(std::span<const NodeHandle> n) override { inner_.adopt(n); }
  StepExecutor& executor() override { return inner_.executor(); }
  void inject_step_failure(const std::string& h, const std::string& s) override {
    inner_.inject_step_failure(h, s);
  }

  int calls = 0;

 private:
  SimulatedDriver inner_;
  int failures_;
};

TEST(Plan, Fig1HasEightPhases) {
  const RunPlan p = plan_run(fig1(), 42, "r");
  EXPECT_EQ(phase_ids(p),
            (std::vector<std::string>{"allocate_nodes", "restore_snapshots", "install_k8s",
                                      "join_workers", "deploy_app:docker@all",
                                      "deploy_app:dashboard@cluster", "run_experiment",
                                      "process_results"}));
  EXPECT_EQ(p.seed, 42u);
  EXPECT_EQ(p.find("deploy_app:dashboard@cluster")->depends_on,
            (std::vector<std::string>{"install_k8s", "deploy_app:docker@all"}));
  EXPECT_EQ(p.find("deploy_app:docker@all")->params.at("version"), "latest");
  EXPECT_EQ(plan_run(fig1(), 42, "r"), p);
  EXPECT_EQ(plan_run(fig1(), std::nullopt, "r").seed, descriptor_hash(fig1()));
}

TEST(Plan, DependenciesAreTopological) {
  const RunPlan p = plan_run(fig1(), 1, "r");
  std::set<std::string> seen;
  for (const auto& s : p.phases) {
    for (const auto& d : s.depends_on) EXPECT_TRUE(seen.contains(d)) << s.id << " " << d;
    seen.insert(s.id);
  }
}

TEST(Plan, ZeroAppsAndNoSnapshots) {
  std::string text = with_line(fig1_text(), "app_names", "[]");
  text = with_line(text, "app_scopes", "[]");
  text = with_line(text, "use_snapshots", "false");
  const RunPlan p = plan_run(parse_descriptor(text), 1, "r");
  EXPECT_EQ(phase_ids(p),
            (std::vector<std::string>{"allocate_nodes", "install_k8s", "join_workers",
                                      "run_experiment", "process_results"}));
}

TEST(Plan, SingleNodeHasNoJoinAndDuplicateAppsAreNumbered) {
  std::string text = with_line(fig1_text(), "worker_hosts", "[]");
  text = with_line(text, "worker_ips", "[]");
  text = with_line(text, "worker_macs", "[]");
  text = with_line(text, "app_names", "[\"docker\", \"docker\"]");
  text = with_line(text, "app_scopes", "[\"all\", \"all\"]");
  const RunPlan p = plan_run(parse_descriptor(text), 1, "r");
  const auto ids = phase_ids(p);
  EXPECT_EQ(std::count(ids.begin(), ids.end(), "join_workers"), 0);
  EXPECT_NE(std::find(ids.begin(), ids.end(), "deploy_app:docker@all#2"), ids.end());
}

TEST(RunId, Format) {
  const auto at = std::chrono::system_clock::time_point(std::chrono::seconds(1'790'000'000));
  EXPECT_EQ(make_run_id("my_experiment", at, 42), "my_experiment-20260921T141320Z-42");
}

TEST(Run, Fig1SucceedsAndRecordsEverything) {
  TempDir out("run");
  const RunRecord r = run_fig1(out.path(), 42);
  ASSERT_TRUE(r.succeeded()) << record_to_json(r);
  const fs::path dir = run_dir(out.path(), "fig1");
  for (const char* f : {"record.json", "descriptor.canonical", "results.csv", "failures.json",
                        "metrics.json", "report.tex", "plots/latency-all.svg"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  EXPECT_EQ(r.nodes.size(), 2u);
  EXPECT_EQ(r.driver, "simulated");
  EXPECT_EQ(r.seed, 42u);
  ASSERT_TRUE(r.cluster);
  EXPECT_EQ(r.cluster->fabric, "l2s-m");
  EXPECT_EQ(record_from_json(file(dir, "record.json")), r);
  EXPECT_EQ(record_from_json(record_to_json(r)), r);
  const auto samples = parse_results_csv(file(dir, "results.csv"));
  EXPECT_EQ(samples.size(), 80u);  // 2 inputs x 4 traffic conditions x 10
  for (const auto& s : aggregate(samples)) EXPECT_EQ(s.count, 10);
  const std::string json = file(dir, "metrics.json");
  EXPECT_NE(json.find("\"seed\": \"42\""), std::string::npos);
  EXPECT_EQ(json.find("created"), std::string::npos);
}

TEST(Run, Deterministic) {
  TempDir a("det-a");
  TempDir b("det-b");
  ASSERT_TRUE(run_fig1(a.path(), 42).succeeded());
  ASSERT_TRUE(run_fig1(b.path(), 42).succeeded());
  const fs::path da = run_dir(a.path(), "fig1");
  const fs::path db = run_dir(b.path(), "fig1");
  for (const char* f : {"results.csv", "metrics.json", "plots/latency-all.svg",
                        "report.tex", "descriptor.canonical"}) {
    EXPECT_EQ(file(da, f), file(db, f)) << f;
  }
  TempDir c("det-c");
  ASSERT_TRUE(run_fig1(c.path(), 43).succeeded());
  EXPECT_NE(file(da, "results.csv"), file(run_dir(c.path(), "fig1"), "results.csv"));
}

TEST(Run, AllocatesEveryDeclaredNodeBeforeInstall) {
  std::string text = with_line(fig1_text(), "worker_hosts", "[\"w1\", \"w2\"]");
  text = with_line(text, "worker_ips", "[\"10.1.0.2\", \"10.1.0.3\"]");
  text = with_line(text, "worker_macs", "[\"02:00:00:00:01:02\", \"02:00:00:00:01:03\"]");
  const auto d = parse_descriptor(text);
  TempDir out("three");
  SimulatedDriver drv(fast_sim(3));
  EngineOptions o = engine_options(out.path());
  o.stop_after = "allocate_nodes";
  const RunRecord r = execute_run(plan_run(d, 3, "three"), d, drv,
                                  ControllerRegistry::builtin(), catalog(), o);
  ASSERT_EQ(r.nodes.size(), 3u);
  EXPECT_EQ(r.nodes[0].role, NodeRole::kMaster);
  EXPECT_EQ(r.nodes[1].host, "w1");
  EXPECT_EQ(r.nodes[2].ip, "10.1.0.3");
  EXPECT_EQ(r.find("allocate_nodes")->status, PhaseStatus::kSucceeded);
  EXPECT_EQ(r.find("install_k8s")->status, PhaseStatus::kPending);
  EXPECT_TRUE(r.find("install_k8s")->attempts.empty());
  EXPECT_FALSE(r.succeeded());
}

TEST(Run, ControllerErrorFailsExperimentAndSkipsResults) {
  TempDir out("ctl-fail");
  const auto d = fig1();
  SimulatedDriver drv(fast_sim(1));
  const auto reg = registry_with(std::make_unique<ThrowingController>());
  const RunRecord r =
      execute_run(plan_run(d, 1, "x"), d, drv, reg, catalog(), engine_options(out.path()));
  EXPECT_FALSE(r.succeeded());
  EXPECT_EQ(r.find("run_experiment")->status, PhaseStatus::kFailed);
  EXPECT_EQ(r.find("run_experiment")->attempts.back().message,
            "probe pod never became ready");
  EXPECT_EQ(r.find("process_results")->status, PhaseStatus::kSkipped);
  EXPECT_EQ(r.find("deploy_app:dashboard@cluster")->status, PhaseStatus::kSucceeded);
  EXPECT_NE(record_to_json(r).find("\"status\": \"failed\""), std::string::npos);
}

TEST(Run, AppStepFailureSkipsDependents) {
  TempDir out("app-fail");
  const auto d = fig1();
  SimulatedDriver drv(fast_sim(1));
  drv.inject_step_failure("athw1", "containerd.io installed");
  const RunRecord r = execute_run(plan_run(d, 1, "x"), d, drv, ControllerRegistry::builtin(),
                                  catalog(), engine_options(out.path()));
  const auto* docker = r.find("deploy_app:docker@all");
  EXPECT_EQ(docker->status, PhaseStatus::kFailed);
  EXPECT_NE(docker->attempts.back().message.find("failed on athw1"), std::string::npos);
  EXPECT_EQ(r.find("deploy_app:dashboard@cluster")->status, PhaseStatus::kSkipped);
  EXPECT_EQ(r.find("run_experiment")->status, PhaseStatus::kSkipped);
  EXPECT_EQ(r.find("process_results")->status, PhaseStatus::kSkipped);
}

TEST(Run, JoinFailureLeavesPartialCluster) {
  TempDir out("join-fail");
  const auto d = fig1();
  SimulatedDriver drv(fast_sim(1));
  drv.inject_step_failure("athw1", "joined athm1");
  const RunRecord r = execute_run(plan_run(d, 1, "x"), d, drv, ControllerRegistry::builtin(),
                                  catalog(), engine_options(out.path()));
  const auto* join = r.find("join_workers");
  EXPECT_EQ(join->status, PhaseStatus::kFailed);
  EXPECT_NE(join->attempts.back().message.find("partial cluster (1 of 2 nodes ready)"),
            std::string::npos);
  ASSERT_TRUE(r.cluster);
  EXPECT_EQ(r.cluster->failed_joins.size(), 1u);
  EXPECT_EQ(r.find("deploy_app:docker@all")->status, PhaseStatus::kSkipped);
}

TEST(Run, PhaseTimeout) {
  TempDir out("timeout");
  const auto d = fig1();
  SimulatedDriver drv(fast_sim(1));
  EngineOptions o = engine_options(out.path());
  o.phase_timeout = std::chrono::milliseconds(200);
  const auto reg = registry_with(std::make_unique<StallingController>());
  const auto t0 = std::chrono::steady_clock::now();
  const RunRecord r = execute_run(plan_run(d, 1, "x"), d, drv, reg, catalog(), o);
  EXPECT_LT(std::chrono::steady_clock::now() - t0, std::chrono::seconds(5));
  const auto* exp = r.find("run_experiment");
  EXPECT_EQ(exp->status, PhaseStatus::kFailed);
  EXPECT_EQ(exp->attempts.back().message, "timed out after 200 ms");
}

TEST(Run, TransientInfraErrorIsRetriedOnce) {
  const auto d = fig1();
  {
    TempDir out("retry");
    FlakyDriver drv(1);
    const RunRecord r = execute_run(plan_run(d, 1, "x"), d, drv,
                                    ControllerRegistry::builtin(), catalog(),
                                    engine_options(out.path()));
    EXPECT_TRUE(r.succeeded());
    EXPECT_EQ(drv.calls, 2);
    EXPECT_EQ(r.find("allocate_nodes")->attempts.size(), 2u);
  }
  {
    TempDir out("retry2");
    FlakyDriver drv(2);
    const RunRecord r = execute_run(plan_run(d, 1, "x"), d, drv,
                                    ControllerRegistry::builtin(), catalog(),
                                    engine_options(out.path()));
    EXPECT_EQ(r.find("allocate_nodes")->status, PhaseStatus::kFailed);
    EXPECT_EQ(drv.calls, 2);
    EXPECT_EQ(r.find("install_k8s")->status, PhaseStatus::kSkipped);
  }
}

TEST(Run, RejectsInvalidDescriptorAndExistingRun) {
  TempDir out("reject");
  const auto bad = parse_descriptor(with_line(fig1_text(), "k8s_type", "k0s"));
  SimulatedDriver drv(fast_sim(1));
  EXPECT_THROW(execute_run(plan_run(bad, 1, "bad"), bad, drv, ControllerRegistry::builtin(),
                           catalog(), engine_options(out.path())),
               OrchestratorError);
  ASSERT_TRUE(run_fig1(out.path(), 1, "dup").succeeded());
  EXPECT_THROW(run_fig1(out.path(), 1, "dup"), OrchestratorError);
}

TEST(Resume, CrashMidPipelineDoesNotRerunSucceededPhases) {
  TempDir out("resume");
  const auto d = fig1();
  const RunPlan plan = plan_run(d, 42, "crash");
  {
    SimulatedDriver drv(fast_sim(42));
    EngineOptions o = engine_options(out.path());
    o.crash_during = "run_experiment";
    const RunRecord r = execute_run(plan, d, drv, ControllerRegistry::builtin(), catalog(), o);
    EXPECT_EQ(r.find("run_experiment")->status, PhaseStatus::kRunning);
    EXPECT_EQ(r.find("process_results")->status, PhaseStatus::kPending);
  }
  const RunRecord before =
      record_from_json(read_file(run_dir(out.path(), "crash") / "record.json"));
  EXPECT_EQ(before.find("run_experiment")->status, PhaseStatus::kRunning);
  SimulatedDriver fresh(fast_sim(42));
  const RunRecord after = resume_run("crash", fresh, ControllerRegistry::builtin(), catalog(),
                                     engine_options(out.path()));
  ASSERT_TRUE(after.succeeded()) << record_to_json(after);
  for (const auto& p : before.phases) {
    if (p.status != PhaseStatus::kSucceeded) continue;
    EXPECT_EQ(after.find(p.id)->attempts, p.attempts) << p.id;
  }
  EXPECT_EQ(after.find("run_experiment")->attempts.size(), 2u);
  EXPECT_EQ(after.find("process_results")->attempts.size(), 1u);
  EXPECT_TRUE(fs::exists(run_dir(out.path(), "crash") / "report.tex"));

  // Same outputs as an uninterrupted run.
  TempDir ref("resume-ref");
  ASSERT_TRUE(run_fig1(ref.path(), 42, "crash").succeeded());
  EXPECT_EQ(read_file(run_dir(out.path(), "crash") / "results.csv"),
            read_file(run_dir(ref.path(), "crash") / "results.csv"));
}

TEST(Resume, FailedPhaseRunsAgain) {
  TempDir out("resume-fail");
  const auto d = fig1();
  {
    SimulatedDriver drv(fast_sim(1));
    const auto reg = registry_with(std::make_unique<ThrowingController>());
    execute_run(plan_run(d, 1, "f"), d, drv, reg, catalog(), engine_options(out.path()));
  }
  SimulatedDriver drv(fast_sim(1));
  const RunRecord r = resume_run("f", drv, ControllerRegistry::builtin(), catalog(),
                                 engine_options(out.path()));
  EXPECT_TRUE(r.succeeded());
  EXPECT_EQ(r.find("install_k8s")->attempts.size(), 1u);
  EXPECT_EQ(r.find("run_experiment")->attempts.size(), 2u);
}

TEST(Resume, CompletedRunIsANoOp) {
  TempDir out("noop");
  const RunRecord first = run_fig1(out.path(), 5);
  const std::string before = read_file(run_dir(out.path(), "fig1") / "record.json");
  SimulatedDriver drv(fast_sim(5));
  const RunRecord again = resume_run("fig1", drv, ControllerRegistry::builtin(), catalog(),
                                     engine_options(out.path()));
  EXPECT_EQ(again, first);
  EXPECT_EQ(read_file(run_dir(out.path(), "fig1") / "record.json"), before);
}

TEST(Resume, UnknownOrCorruptedRun) {
  TempDir out("corrupt");
  SimulatedDriver drv(fast_sim(1));
  EXPECT_THROW(resume_run("nope", drv, ControllerRegistry::builtin(), catalog(),
                          engine_options(out.path())),
               OrchestratorError);
  ASSERT_TRUE(run_fig1(out.path(), 1, "c").succeeded());
  write_file_atomic(run_dir(out.path(), "c") / "record.json", "{\"run_id\": 3");
  try {
    resume_run("c", drv, ControllerRegistry::builtin(), catalog(), engine_options(out.path()));
    FAIL();
  } catch (const OrchestratorError& e) {
    EXPECT_TRUE(std::string(e.what()).starts_with("corrupted record")) << e.what();
  }
  EXPECT_THROW(record_from_json("[]"), OrchestratorError);
}

TEST(Record, EventsFollowLegalTransitions) {
  TempDir out("events");
  const RunRecord r = run_fig1(out.path(), 9);
  std::map<std::string, PhaseStatus> last;
  for (const auto& e : r.events) {
    const auto it = last.find(e.phase);
    const PhaseStatus from = it == last.end() ? PhaseStatus::kPending : it->second;
    const bool legal =
        (from == PhaseStatus::kPending &&
         (e.status == PhaseStatus::kRunning || e.status == PhaseStatus::kSkipped)) ||
        (from == PhaseStatus::kRunning &&
         (e.status == PhaseStatus::kSucceeded || e.status == PhaseStatus::kFailed));
    EXPECT_TRUE(legal) << e.phase << " " << to_string(from) << " -> " << to_string(e.status);
    last[e.phase] = e.status;
  }
  EXPECT_EQ(last.size(), r.phases.size());
}

TEST(ProcessResults, RerendersFromFiles) {
  TempDir out("rerender");
  const RunRecord r = run_fig1(out.path(), 2);
  const fs::path dir = run_dir(out.path(), "fig1");
  const std::string tex = read_file(dir / "report.tex");
  const std::string metrics = read_file(dir / "metrics.json");
  fs::remove(dir / "report.tex");
  fs::remove_all(dir / "plots");
  process_results(dir, fig1(), r);
  EXPECT_EQ(read_file(dir / "report.tex"), tex);
  EXPECT_EQ(read_file(dir / "metrics.json"), metrics);
}

TEST(Enums, RoundTrip) {
  for (auto k : {PhaseKind::kAllocateNodes, PhaseKind::kRestoreSnapshots,
                 PhaseKind::kInstallK8s, PhaseKind::kJoinWorkers, PhaseKind::kDeployApp,
                 PhaseKind::kRunExperiment, PhaseKind::kProcessResults}) {
    EXPECT_EQ(parse_phase_kind(to_string(k)), k);
  }
  for (auto s : {PhaseStatus::kPending, PhaseStatus::kRunning, PhaseStatus::kSucceeded,
                 PhaseStatus::kFailed, PhaseStatus::kSkipped}) {
    EXPECT_EQ(parse_phase_status(to_string(s)), s);
  }
  EXPECT_FALSE(parse_phase_kind("reboot"));
}

}  // namespace
}  // namespace edgebench
