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

#include "edgebench/orchestrator.h"

#include <algorithm>
#include <atomic>
#include <ctime>
#include <future>
#include <mutex>
#include <set>
#include <thread>

#include <fmt/core.h>
#include <fmt/ranges.h>

#include "edgebench/results.h"
#include "json.hpp"

namespace edgebench {
namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string iso8601(std::chrono::system_clock::time_point t) {
  const auto secs = std::chrono::time_point_cast<std::chrono::seconds>(t);
  const auto ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(t - secs).count();
  const std::time_t tt = std::chrono::system_clock::to_time_t(secs);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%S", &tm);
  return fmt::format("{}.{:03d}Z", buf, ms);
}

std::string hex64(std::uint64_t v) { return fmt::format("{:016x}", v); }

json node_to_json(const NodeHandle& n) {
  return {{"host", n.host},
          {"ip", n.ip},
          {"mac", n.mac},
          {"role", std::string(to_string(n.role))},
          {"state", std::string(to_string(n.state))},
          {"snapshot_id", n.snapshot_id ? json(*n.snapshot_id) : json(nullptr)}};
}

NodeHandle node_from_json(const nlohmann::json& j) {
  NodeHandle n;
  n.host = j.at("host").get<std::string>();
  n.ip = j.at("ip").get<std::string>();
  n.mac = j.at("mac").get<std::string>();
  const auto role = parse_node_role(j.at("role").get<std::string>());
  const auto state = parse_node_state(j.at("state").get<std::string>());
  if (!role || !state) throw OrchestratorError("corrupted record: bad node");
  n.role = *role;
  n.state = *state;
  if (!j.at("snapshot_id").is_null()) n.snapshot_id = j["snapshot_id"].get<std::string>();
  return n;
}

const NodeHandle* first_master(const std::vector<NodeHandle>& nodes) {
  for (const auto& n : nodes) {
    if (n.role == NodeRole::kMaster) return &n;
  }
  return nullptr;
}

// Serializes record mutations and persists after each one.
class RecordWriter {
 public:
  RecordWriter(RunRecord rec, fs::path dir, WallClock clock)
      : rec_(std::move(rec)), dir_(std::move(dir)), clock_(std::move(clock)) {}

  std::string now() const { return iso8601(clock_()); }

  void persist() {
    std::lock_guard lock(mu_);
    persist_locked();
  }

  void set_status(const std::string& id, PhaseStatus next,
                  const std::string& message = "") {
    std::lock_guard lock(mu_);
    PhaseRecord& p = phase(id);
    const PhaseStatus cur = p.status;
    const bool legal =
        (cur == PhaseStatus::kPending &&
         (next == PhaseStatus::kRunning || next == PhaseStatus::kSkipped)) ||
        (cur == PhaseStatus::kRunning &&
         (next == PhaseStatus::kSucceeded || next == PhaseStatus::kFailed)) ||
        // Resume re-arms unfinished phases; the history stays in events.
        (next == PhaseStatus::kPending && cur != PhaseStatus::kSucceeded);
    if (!legal) {
      throw std::logic_error(fmt::format("phase {}: illegal transition {} -> {}", id,
                                         to_string(cur), to_string(next)));
    }
    const std::string at = now();
    p.status = next;
    if (next == PhaseStatus::kRunning) {
      p.attempts.push_back({at, "", PhaseStatus::kRunning, ""});
    } else if (next == PhaseStatus::kSucceeded || next == PhaseStatus::kFailed) {
      p.attempts.back().ended_at = at;
      p.attempts.back().status = next;
      p.attempts.back().message = message;
    } else if (next == PhaseStatus::kSkipped) {
      p.log.push_back(message);
    }
    rec_.events.push_back({at, id, next});
    persist_locked();
  }

  // Closes the current attempt as failed and opens a new one.
  void retry(const std::string& id, const std::string& message) {
    std::lock_guard lock(mu_);
    PhaseRecord& p = phase(id);
    const std::string at = now();
    p.attempts.back().ended_at = at;
    p.attempts.back().status = PhaseStatus::kFailed;
    p.attempts.back().message = message;
    p.attempts.push_back({at, "", PhaseStatus::kRunning, ""});
    p.log.push_back(fmt::format("retrying after: {}", message));
    persist_locked();
  }

  void log(const std::string& id, std::string line) {
    std::lock_guard lock(mu_);
    phase(id).log.push_back(std::move(line));
    persist_locked();
  }

  template <typename F>
  void update(F&& f) {
    std::lock_guard lock(mu_);
    f(rec_);
    persist_locked();
  }

  RunRecord snapshot() const {
    std::lock_guard lock(mu_);
    return rec_;
  }

  PhaseStatus status(const std::string& id) const {
    std::lock_guard lock(mu_);
    const PhaseRecord* p = rec_.find(id);
    return p ? p->status : PhaseStatus::kPending;
  }

 private:
  PhaseRecord& phase(const std::string& id) {
    for (auto& p : rec_.phases) {
      if (p.id == id) return p;
    }
    throw std::logic_error(fmt::format("unknown phase {}", id));
  }

  void persist_locked() { write_file_atomic(dir_ / "record.json", record_to_json(rec_)); }

  mutable std::mutex mu_;
  RunRecord rec_;
  fs::path dir_;
  WallClock clock_;
};

class PhaseTimeout : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Engine {
 public:
  Engine(const RunPlan& plan, const ExperimentDescriptor& d, Driver& driver,
         const ControllerRegistry& controllers, const AppCatalog& catalog,
         const EngineOptions& options, RecordWriter& writer, fs::path dir)
      : plan_(plan),
        d_(d),
        driver_(driver),
        controllers_(controllers),
        catalog_(catalog),
        options_(options),
        writer_(writer),
        dir_(std::move(dir)) {
    const RunRecord r = writer_.snapshot();
    nodes_ = r.nodes;
    cluster_ = r.cluster;
    timeout_ = options_.phase_timeout.value_or(
        driver_.id() == "simulated" ? std::chrono::milliseconds(10'000)
                                    : std::chrono::milliseconds(600'000));
  }

  void run() {
    while (!halted_) {
      std::vector<const PhaseSpec*> ready;
      bool skipped_any = false;
      for (const auto& p : plan_.phases) {
        if (writer_.status(p.id) != PhaseStatus::kPending) continue;
        bool deps_ok = true;
        std::string blocked;
        for (const auto& dep : p.depends_on) {
          const PhaseStatus s = writer_.status(dep);
          if (s == PhaseStatus::kFailed || s == PhaseStatus::kSkipped) blocked = dep;
          if (s != PhaseStatus::kSucceeded) deps_ok = false;
        }
        if (!blocked.empty()) {
          writer_.set_status(p.id, PhaseStatus::kSkipped,
                             fmt::format("skipped: dependency {} did not succeed",
                                         blocked));
          say(fmt::format("[skip] {}", p.id));
          skipped_any = true;
        } else if (deps_ok) {
          ready.push_back(&p);
        }
      }
      if (ready.empty()) {
        if (skipped_any) continue;
        break;
      }
      if (ready.size() == 1) {
        run_phase(*ready.front());
      } else {
        std::vector<std::jthread> wave;
        for (const auto* p : ready) wave.emplace_back([this, p] { run_phase(*p); });
      }
      for (const auto* p : ready) {
        if (!options_.stop_after.empty() && p->id == options_.stop_after) halted_ = true;
      }
    }
  }

 private:
  void say(std::string_view line) const {
    if (options_.log) options_.log(line);
  }

  void run_phase(const PhaseSpec& p) {
    writer_.set_status(p.id, PhaseStatus::kRunning);
    say(fmt::format("[run ] {}", p.id));
    if (!options_.crash_during.empty() && p.id == options_.crash_during) {
      halted_ = true;
      return;
    }
    for (int attempt = 0;; ++attempt) {
      try {
        run_with_timeout(p);
        writer_.set_status(p.id, PhaseStatus::kSucceeded);
        say(fmt::format("[ ok ] {}", p.id));
        return;
      } catch (const InfraError& e) {
        if (e.kind() == InfraError::Kind::kTransient && attempt == 0) {
          writer_.retry(p.id, e.what());
          say(fmt::format("[retry] {}: {}", p.id, e.what()));
          continue;
        }
        fail(p, e.what());
        return;
      } catch (const std::exception& e) {
        fail(p, e.what());
        return;
      }
    }
  }

  void fail(const PhaseSpec& p, const std::string& message) {
    writer_.log(p.id, fmt::format("error: {}", message));
    writer_.set_status(p.id, PhaseStatus::kFailed, message);
    say(fmt::format("[FAIL] {}: {}", p.id, message));
  }

  void run_with_timeout(const PhaseSpec& p) {
    std::promise<void> done;
    std::future<void> fut = done.get_future();
    std::jthread worker([&](std::stop_token st) {
      try {
        body(p, st);
        done.set_value();
      } catch (...) {
        done.set_exception(std::current_exception());
      }
    });
    if (fut.wait_for(timeout_) == std::future_status::timeout) {
      worker.request_stop();
      worker.join();
      throw PhaseTimeout(fmt::format("timed out after {} ms", timeout_.count()));
    }
    fut.get();
  }

  std::vector<NodeHandle> nodes() const {
    std::lock_guard lock(state_mu_);
    return nodes_;
  }

  void set_nodes(std::vector<NodeHandle> nodes) {
    {
      std::lock_guard lock(state_mu_);
      nodes_ = nodes;
    }
    writer_.update([&](RunRecord& r) { r.nodes = std::move(nodes); });
  }

  void replace_node(const NodeHandle& n) {
    std::vector<NodeHandle> all = this->nodes();
    for (auto& x : all) {
      if (x.host == n.host) x = n;
    }
    set_nodes(std::move(all));
  }

  void body(const PhaseSpec& p, std::stop_token stop) {
    switch (p.kind) {
      case PhaseKind::kAllocateNodes:
        return allocate(p);
      case PhaseKind::kRestoreSnapshots:
        return restore(p);
      case PhaseKind::kInstallK8s:
        return install(p);
      case PhaseKind::kJoinWorkers:
        return join(p);
      case PhaseKind::kDeployApp:
        return deploy(p);
      case PhaseKind::kRunExperiment:
        return experiment(p, stop);
      case PhaseKind::kProcessResults:
        return results(p);
    }
  }

  void allocate(const PhaseSpec& p) {
    const auto reqs = node_requests(d_);
    std::vector<NodeHandle> got;
    {
      std::lock_guard lock(driver_mu_);
      got = driver_.allocate_nodes(reqs, d_.infra.node_osimage, d_.infra.use_snapshots);
    }
    for (const auto& n : got) {
      writer_.log(p.id, fmt::format("{} {} ({}, {}) {}", to_string(n.role), n.host,
                                    n.ip, n.mac, to_string(n.state)));
    }
    writer_.log(p.id, fmt::format("allocated {} nodes", got.size()));
    set_nodes(std::move(got));
  }

  void restore(const PhaseSpec& p) {
    std::vector<NodeHandle> out;
    for (const auto& n : nodes()) {
      std::lock_guard lock(driver_mu_);
      out.push_back(driver_.restore_snapshot(n));
      writer_.log(p.id, fmt::format("restored {} from {}", n.host,
                                    n.snapshot_id.value_or("(none)")));
    }
    set_nodes(std::move(out));
  }

  void log_outcomes(const PhaseSpec& p, const StepOutcomes& o) {
    int changed = 0;
    int unchanged = 0;
    for (const auto& s : o.steps) {
      if (s.status == StepStatus::kChanged) ++changed;
      if (s.status == StepStatus::kUnchanged) ++unchanged;
    }
    writer_.log(p.id, fmt::format("{} {} on {}: {} changed, {} unchanged{}", o.app,
                                  o.version, o.host, changed, unchanged,
                                  o.ok() ? "" : ", failed"));
  }

  void install(const PhaseSpec& p) {
    const auto all = nodes();
    const NodeHandle* master = first_master(all);
    if (master == nullptr) throw ResourceError("no master node allocated");
    const K8sContext ctx = make_k8s_context(d_.k8s, all);
    const StepOutcomes o = apply_steps(*master, k8s_template(ctx, NodeRole::kMaster),
                                       driver_.executor());
    log_outcomes(p, o);
    if (!o.ok()) throw ResourceError(o.failure());
    const NodeHandle ready = master->with_state(NodeState::kK8sReady);
    replace_node(ready);
    ClusterReady c;
    c.type = ctx.type;
    c.version = ctx.version;
    c.scheduler = ctx.scheduler;
    c.fabric = ctx.fabric;
    c.nodes = nodes();
    set_cluster(std::move(c));
  }

  void set_cluster(ClusterReady c) {
    {
      std::lock_guard lock(state_mu_);
      cluster_ = c;
    }
    writer_.update([&](RunRecord& r) { r.cluster = std::move(c); });
  }

  void join(const PhaseSpec& p) {
    const auto all = nodes();
    const NodeHandle* master = first_master(all);
    if (master == nullptr) throw ResourceError("no master node allocated");
    const K8sContext ctx = make_k8s_context(d_.k8s, all);
    std::vector<NodeHandle> joining;
    for (const auto& n : all) {
      if (n.host != master->host) joining.push_back(n);
    }
    std::vector<StepOutcomes> outcomes(joining.size());
    std::vector<std::string> errors(joining.size());
    {
      std::vector<std::jthread> threads;
      for (std::size_t i = 0; i < joining.size(); ++i) {
        threads.emplace_back([&, i] {
          try {
            outcomes[i] = apply_steps(joining[i], k8s_template(ctx, NodeRole::kWorker),
                                      driver_.executor());
          } catch (const std::exception& e) {
            errors[i] = e.what();
          }
        });
      }
    }
    ClusterReady c = cluster_.value_or(ClusterReady{});
    for (std::size_t i = 0; i < joining.size(); ++i) {
      if (errors[i].empty()) log_outcomes(p, outcomes[i]);
      const std::string why = !errors[i].empty() ? errors[i] : outcomes[i].failure();
      if (why.empty()) {
        replace_node(joining[i].with_state(NodeState::kK8sReady));
      } else {
        c.failed_joins.push_back(fmt::format("{}: {}", joining[i].host, why));
      }
    }
    c.nodes = nodes();
    set_cluster(c);
    if (!c.complete()) {
      throw ResourceError(fmt::format("partial cluster ({} of {} nodes ready): {}",
                                      c.ready_nodes().size(), c.nodes.size(),
                                      fmt::join(c.failed_joins, "; ")));
    }
  }

  void deploy(const PhaseSpec& p) {
    const auto all = nodes();
    const auto scope = parse_scope(p.params.at("scope"));
    if (!scope) throw ResourceError(fmt::format("bad scope {}", p.params.at("scope")));
    const K8sContext ctx = make_k8s_context(d_.k8s, all);
    const AppTemplate tmpl =
        render_template(catalog_, p.params.at("app"), p.params.at("version"), ctx);
    if (!tmpl.allowed_scopes.contains(*scope)) {
      throw ResourceError(fmt::format("app {} cannot be deployed with scope {}",
                                      tmpl.name, to_string(*scope)));
    }
    const auto targets = resolve_scope(*scope, all);
    if (targets.empty()) {
      writer_.log(p.id, "no nodes in scope");
      return;
    }
    std::vector<StepOutcomes> outcomes(targets.size());
    std::vector<std::string> errors(targets.size());
    {
      std::vector<std::jthread> threads;
      for (std::size_t i = 0; i < targets.size(); ++i) {
        threads.emplace_back([&, i] {
          try {
            outcomes[i] = apply_steps(targets[i], tmpl, driver_.executor());
          } catch (const std::exception& e) {
            errors[i] = e.what();
          }
        });
      }
    }
    std::vector<std::string> failures;
    for (std::size_t i = 0; i < targets.size(); ++i) {
      if (!errors[i].empty()) {
        failures.push_back(fmt::format("{}: {}", targets[i].host, errors[i]));
        continue;
      }
      log_outcomes(p, outcomes[i]);
      if (!outcomes[i].ok()) failures.push_back(outcomes[i].failure());
    }
    if (!failures.empty()) throw ResourceError(fmt::format("{}", fmt::join(failures, "; ")));
  }

  void experiment(const PhaseSpec& p, std::stop_token stop) {
    std::optional<ClusterReady> cluster;
    {
      std::lock_guard lock(state_mu_);
      cluster = cluster_;
    }
    if (!cluster) throw OrchestratorError("cluster is not ready");
    Controller& controller = controllers_.lookup(d_.experiment.manager);
    ControllerRequest req;
    req.controller_id = d_.experiment.manager;
    req.inputs = d_.experiment.inputs;
    req.metrics = d_.experiment.metrics;
    req.replications = d_.experiment.replications;
    req.cluster = *cluster;
    req.seed = plan_.seed;
    req.options = d_.experiment.options;
    const ControllerResult result = controller.run(req, stop);
    write_file_atomic(dir_ / "results.csv", results_csv(result.samples));
    write_file_atomic(dir_ / "failures.json", failures_json(result.failures));
    json meta = json::object();
    for (const auto& [k, v] : result.metadata) meta[k] = v;
    write_file_atomic(dir_ / "experiment.json", meta.dump(2) + "\n");
    writer_.log(p.id, fmt::format("{} samples, {} failures", result.samples.size(),
                                  result.failures.size()));
    writer_.update([](RunRecord& r) {
      r.artifacts["results"] = "results.csv";
      r.artifacts["failures"] = "failures.json";
      r.artifacts["experiment"] = "experiment.json";
    });
  }

  void results(const PhaseSpec& p) {
    const auto warnings = process_results(dir_, d_, writer_.snapshot());
    for (const auto& w : warnings) {
      writer_.log(p.id, fmt::format("warning: {}", w));
      say(fmt::format("warning: {}", w));
    }
    const bool pdf = fs::exists(dir_ / "report.pdf");
    writer_.update([&](RunRecord& r) {
      r.artifacts["metrics"] = "metrics.json";
      if (fs::exists(dir_ / "report.tex")) r.artifacts["report_tex"] = "report.tex";
      if (pdf) r.artifacts["report_pdf"] = "report.pdf";
      for (const auto& w : warnings) r.warnings.push_back(w);
    });
  }

  const RunPlan& plan_;
  const ExperimentDescriptor& d_;
  Driver& driver_;
  const ControllerRegistry& controllers_;
  const AppCatalog& catalog_;
  const EngineOptions& options_;
  RecordWriter& writer_;
  fs::path dir_;
  std::chrono::milliseconds timeout_{10'000};
  std::mutex driver_mu_;
  mutable std::mutex state_mu_;
  std::vector<NodeHandle> nodes_;
  std::optional<ClusterReady> cluster_;
  std::atomic<bool> halted_{false};
};

WallClock clock_or_default(const EngineOptions& o) {
  if (o.clock) return o.clock;
  return [] { return std::chrono::system_clock::now(); };
}

void check_descriptor(const ExperimentDescriptor& d, const AppCatalog& catalog) {
  auto compat = CompatibilityCatalog::builtin();
  compat.with_apps(catalog.scopes());
  const ValidationReport report = validate(d, compat);
  if (!report.ok()) {
    std::vector<std::string> lines;
    for (const auto& e : report.errors) lines.push_back(e.path + ": " + e.message);
    throw OrchestratorError(
        fmt::format("descriptor has errors: {}", fmt::join(lines, "; ")));
  }
}

}  // namespace

// --- enums -----------------------------------------------------------------------

std::string_view to_string(PhaseKind k) {
  switch (k) {
    case PhaseKind::kAllocateNodes:
      return "allocate_nodes";
    case PhaseKind::kRestoreSnapshots:
      return "restore_snapshots";
    case PhaseKind::kInstallK8s:
      return "install_k8s";
    case PhaseKind::kJoinWorkers:
      return "join_workers";
    case PhaseKind::kDeployApp:
      return "deploy_app";
    case PhaseKind::kRunExperiment:
      return "run_experiment";
    case PhaseKind::kProcessResults:
      return "process_results";
  }
  return "allocate_nodes";
}

std::string_view to_string(PhaseStatus s) {
  switch (s) {
    case PhaseStatus::kPending:
      return "pending";
    case PhaseStatus::kRunning:
      return "running";
    case PhaseStatus::kSucceeded:
      return "succeeded";
    case PhaseStatus::kFailed:
      return "failed";
    case PhaseStatus::kSkipped:
      return "skipped";
  }
  return "pending";
}

std::optional<PhaseKind> parse_phase_kind(std::string_view s) {
  for (int i = 0; i <= static_cast<int>(PhaseKind::kProcessResults); ++i) {
    const auto k = static_cast<PhaseKind>(i);
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::optional<PhaseStatus> parse_phase_status(std::string_view s) {
  for (int i = 0; i <= static_cast<int>(PhaseStatus::kSkipped); ++i) {
    const auto k = static_cast<PhaseStatus>(i);
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

// --- plan --------------------------------------------------------------------------

const PhaseSpec* RunPlan::find(std::string_view id) const {
  for (const auto& p : phases) {
    if (p.id == id) return &p;
  }
  return nullptr;
}

std::string make_run_id(std::string_view title,
                        std::chrono::system_clock::time_point at,
                        std::uint64_t seed) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(at);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y%m%dT%H%M%SZ", &tm);
  return fmt::format("{}-{}-{}", title, buf, seed);
}

RunPlan plan_run(const ExperimentDescriptor& d, std::optional<std::uint64_t> seed,
                 std::string run_id) {
  RunPlan plan;
  plan.seed = seed.value_or(descriptor_hash(d));
  plan.run_id = std::move(run_id);
  auto add = [&](std::string id, PhaseKind kind, std::vector<std::string> deps,
                 std::map<std::string, std::string> params = {}) {
    plan.phases.push_back({std::move(id), kind, std::move(params), std::move(deps)});
    return plan.phases.back().id;
  };
  std::string last = add("allocate_nodes", PhaseKind::kAllocateNodes, {});
  if (d.infra.use_snapshots) {
    last = add("restore_snapshots", PhaseKind::kRestoreSnapshots, {last});
  }
  const std::string install = add("install_k8s", PhaseKind::kInstallK8s, {last});
  last = install;
  const std::size_t nodes = d.masters.nodes().size() + d.workers.nodes().size();
  std::string join;
  if (nodes > 1) {
    join = add("join_workers", PhaseKind::kJoinWorkers, {install});
    last = join;
  }
  // Apps chain in declaration order; cluster- and master-scoped apps do not
  // wait for workers to join.
  std::string prev_app;
  std::set<std::string> used;
  for (const auto& app : d.apps.requests()) {
    std::string id = fmt::format("deploy_app:{}@{}", app.name, to_string(app.scope));
    for (int n = 2; used.contains(id); ++n) {
      id = fmt::format("deploy_app:{}@{}#{}", app.name, to_string(app.scope), n);
    }
    used.insert(id);
    std::vector<std::string> deps = {install};
    const bool needs_workers =
        app.scope == AppScope::kAll || app.scope == AppScope::kWorker;
    if (needs_workers && !join.empty()) deps.push_back(join);
    if (!prev_app.empty()) deps.push_back(prev_app);
    prev_app = add(id, PhaseKind::kDeployApp, deps,
                   {{"app", app.name},
                    {"version", app.version},
                    {"scope", std::string(to_string(app.scope))}});
  }
  std::vector<std::string> exp_deps = {install};
  if (!join.empty()) exp_deps.push_back(join);
  if (!prev_app.empty()) exp_deps.push_back(prev_app);
  const std::string exp = add("run_experiment", PhaseKind::kRunExperiment, exp_deps,
                              {{"controller", d.experiment.manager}});
  add("process_results", PhaseKind::kProcessResults, {exp});
  return plan;
}

// --- record ------------------------------------------------------------------------

const PhaseRecord* RunRecord::find(std::string_view id) const {
  for (const auto& p : phases) {
    if (p.id == id) return &p;
  }
  return nullptr;
}

bool RunRecord::succeeded() const {
  return std::all_of(phases.begin(), phases.end(), [](const PhaseRecord& p) {
    return p.status == PhaseStatus::kSucceeded;
  });
}

std::string record_to_json(const RunRecord& r) {
  json j;
  j["run_id"] = r.run_id;
  j["seed"] = r.seed;
  j["framework_version"] = r.framework_version;
  j["descriptor_hash"] = r.descriptor_hash;
  j["driver"] = r.driver;
  j["created_at"] = r.created_at;
  j["status"] = r.succeeded() ? "succeeded"
                : std::any_of(r.phases.begin(), r.phases.end(),
                              [](const PhaseRecord& p) {
                                return p.status == PhaseStatus::kFailed;
                              })
                    ? "failed"
                    : "incomplete";
  j["phases"] = json::array();
  for (const auto& p : r.phases) {
    json jp;
    jp["id"] = p.id;
    jp["kind"] = std::string(to_string(p.kind));
    jp["status"] = std::string(to_string(p.status));
    jp["attempts"] = json::array();
    for (const auto& a : p.attempts) {
      jp["attempts"].push_back({{"started_at", a.started_at},
                                {"ended_at", a.ended_at},
                                {"status", std::string(to_string(a.status))},
                                {"message", a.message}});
    }
    jp["log"] = p.log;
    j["phases"].push_back(jp);
  }
  j["events"] = json::array();
  for (const auto& e : r.events) {
    j["events"].push_back(
        {{"at", e.at}, {"phase", e.phase}, {"status", std::string(to_string(e.status))}});
  }
  j["nodes"] = json::array();
  for (const auto& n : r.nodes) j["nodes"].push_back(node_to_json(n));
  if (r.cluster) {
    json c;
    c["type"] = std::string(to_string(r.cluster->type));
    c["version"] = r.cluster->version;
    c["scheduler"] = r.cluster->scheduler;
    c["fabric"] = r.cluster->fabric;
    c["nodes"] = json::array();
    for (const auto& n : r.cluster->nodes) c["nodes"].push_back(node_to_json(n));
    c["failed_joins"] = r.cluster->failed_joins;
    j["cluster"] = c;
  } else {
    j["cluster"] = nullptr;
  }
  j["artifacts"] = r.artifacts;
  j["warnings"] = r.warnings;
  return j.dump(2) + "\n";
}

RunRecord record_from_json(std::string_view text) {
  RunRecord r;
  try {
    const auto j = nlohmann::json::parse(text);
    r.run_id = j.at("run_id").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.framework_version = j.at("framework_version").get<std::string>();
    r.descriptor_hash = j.at("descriptor_hash").get<std::string>();
    r.driver = j.at("driver").get<std::string>();
    r.created_at = j.at("created_at").get<std::string>();
    for (const auto& jp : j.at("phases")) {
      PhaseRecord p;
      p.id = jp.at("id").get<std::string>();
      const auto kind = parse_phase_kind(jp.at("kind").get<std::string>());
      const auto status = parse_phase_status(jp.at("status").get<std::string>());
      if (!kind || !status) throw OrchestratorError("corrupted record: bad phase");
      p.kind = *kind;
      p.status = *status;
      for (const auto& ja : jp.at("attempts")) {
        PhaseAttempt a;
        a.started_at = ja.at("started_at").get<std::string>();
        a.ended_at = ja.at("ended_at").get<std::string>();
        const auto as = parse_phase_status(ja.at("status").get<std::string>());
        if (!as) throw OrchestratorError("corrupted record: bad attempt");
        a.status = *as;
        a.message = ja.at("message").get<std::string>();
        p.attempts.push_back(std::move(a));
      }
      p.log = jp.at("log").get<std::vector<std::string>>();
      r.phases.push_back(std::move(p));
    }
    for (const auto& je : j.at("events")) {
      const auto s = parse_phase_status(je.at("status").get<std::string>());
      if (!s) throw OrchestratorError("corrupted record: bad event");
      r.events.push_back({je.at("at").get<std::string>(),
                          je.at("phase").get<std::string>(), *s});
    }
    for (const auto& jn : j.at("nodes")) r.nodes.push_back(node_from_json(jn));
    if (!j.at("cluster").is_null()) {
      const auto& jc = j["cluster"];
      ClusterReady c;
      const auto type = parse_distro(jc.at("type").get<std::string>());
      if (!type) throw OrchestratorError("corrupted record: bad cluster type");
      c.type = *type;
      c.version = jc.at("version").get<std::string>();
      c.scheduler = jc.at("scheduler").get<std::string>();
      c.fabric = jc.at("fabric").get<std::string>();
      for (const auto& jn : jc.at("nodes")) c.nodes.push_back(node_from_json(jn));
      c.failed_joins = jc.at("failed_joins").get<std::vector<std::string>>();
      r.cluster = std::move(c);
    }
    r.artifacts = j.at("artifacts").get<std::map<std::string, std::string>>();
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw OrchestratorError(fmt::format("corrupted record: {}", e.what()));
  }
  return r;
}

// --- execution ----------------------------------------------------------------------

fs::path run_dir(const fs::path& out_dir, std::string_view run_id) {
  return out_dir / "runs" / std::string(run_id);
}

RunRecord execute_run(const RunPlan& plan, const ExperimentDescriptor& d,
                      Driver& driver, const ControllerRegistry& controllers,
                      const AppCatalog& catalog, const EngineOptions& options) {
  check_descriptor(d, catalog);
  if (plan.run_id.empty()) throw OrchestratorError("plan has no run id");
  const fs::path dir = run_dir(options.out_dir, plan.run_id);
  if (fs::exists(dir / "record.json")) {
    throw OrchestratorError(fmt::format("run {} already exists", plan.run_id));
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw OrchestratorError(
        fmt::format("cannot create run directory {}: {}", dir.string(), ec.message()));
  }
  const WallClock clock = clock_or_default(options);
  RunRecord rec;
  rec.run_id = plan.run_id;
  rec.seed = plan.seed;
  rec.framework_version = EDGEBENCH_VERSION;
  rec.descriptor_hash = hex64(descriptor_hash(d));
  rec.driver = driver.id();
  rec.created_at = iso8601(clock());
  for (const auto& p : plan.phases) rec.phases.push_back({p.id, p.kind, PhaseStatus::kPending, {}, {}});
  rec.artifacts["descriptor"] = "descriptor.canonical";
  try {
    write_file_atomic(dir / "descriptor.canonical", serialize_descriptor(d));
    RecordWriter writer(std::move(rec), dir, clock);
    writer.persist();
    Engine engine(plan, d, driver, controllers, catalog, options, writer, dir);
    engine.run();
    return writer.snapshot();
  } catch (const ResultsError& e) {
    throw OrchestratorError(e.what());
  }
}

RunRecord resume_run(std::string_view run_id, Driver& driver,
                     const ControllerRegistry& controllers, const AppCatalog& catalog,
                     const EngineOptions& options) {
  const fs::path dir = run_dir(options.out_dir, run_id);
  if (!fs::exists(dir / "record.json") || !fs::exists(dir / "descriptor.canonical")) {
    throw OrchestratorError(fmt::format("unknown run id {} (no {})", run_id,
                                        (dir / "record.json").string()));
  }
  RunRecord rec = record_from_json(read_file(dir / "record.json"));
  ExperimentDescriptor d;
  try {
    d = parse_descriptor(read_file(dir / "descriptor.canonical"));
  } catch (const DescriptorError& e) {
    throw OrchestratorError(fmt::format("corrupted record: descriptor: {}", e.what()));
  }
  const RunPlan plan = plan_run(d, rec.seed, rec.run_id);
  if (plan.phases.size() != rec.phases.size()) {
    throw OrchestratorError("corrupted record: phase list does not match the plan");
  }
  for (std::size_t i = 0; i < plan.phases.size(); ++i) {
    if (plan.phases[i].id != rec.phases[i].id) {
      throw OrchestratorError("corrupted record: phase list does not match the plan");
    }
  }
  if (rec.succeeded()) return rec;

  check_descriptor(d, catalog);
  if (!rec.nodes.empty()) driver.adopt(rec.nodes);
  RecordWriter writer(std::move(rec), dir, clock_or_default(options));
  for (const auto& p : writer.snapshot().phases) {
    if (p.status != PhaseStatus::kSucceeded && p.status != PhaseStatus::kPending) {
      writer.set_status(p.id, PhaseStatus::kPending);
    }
  }
  Engine engine(plan, d, driver, controllers, catalog, options, writer, dir);
  engine.run();
  return writer.snapshot();
}

std::vector<std::string> process_results(const fs::path& dir,
                                         const ExperimentDescriptor& d,
                                         const RunRecord& record) {
  std::vector<std::string> warnings;
  const auto samples = parse_results_csv(read_file(dir / "results.csv"));
  std::vector<SampleFailure> failures;
  if (fs::exists(dir / "failures.json")) {
    failures = parse_failures_json(read_file(dir / "failures.json"));
  }
  std::map<std::string, std::string> controller_meta;
  if (fs::exists(dir / "experiment.json")) {
    const auto j = nlohmann::json::parse(read_file(dir / "experiment.json"));
    controller_meta = j.get<std::map<std::string, std::string>>();
  }
  const auto stats = aggregate(samples, failures);
  const auto groups = failure_groups(failures);

  std::map<std::string, std::string> meta;
  meta["title"] = d.experiment_title;
  meta["seed"] = std::to_string(record.seed);
  meta["framework_version"] = record.framework_version;
  meta["descriptor_hash"] = record.descriptor_hash;
  meta["controller"] = d.experiment.manager;
  meta["replications"] = std::to_string(d.experiment.replications);
  for (const auto& [k, v] : controller_meta) meta["controller." + k] = v;
  write_file_atomic(dir / "metrics.json", metrics_json(stats, groups, meta));

  std::vector<std::string> metrics;
  for (const auto& s : stats) {
    if (std::find(metrics.begin(), metrics.end(), s.metric) == metrics.end()) {
      metrics.push_back(s.metric);
    }
  }
  fs::create_directories(dir / "plots");
  std::vector<FigureRef> figures;
  for (const auto& m : metrics) {
    ChartLayout layout;
    layout.title = fmt::format("{}: {}", d.experiment_title, m);
    const std::string rel = chart_file_name(m);
    write_file_atomic(dir / rel, render_bar_chart(stats, m, layout));
    figures.push_back({fmt::format("{} per condition and input, mean with 95\\% "
                                   "confidence interval",
                                   m),
                       rel});
  }
  if (samples.empty()) warnings.push_back("experiment produced no samples");

  if (d.experiment.results_output == ResultsOutput::kNone) return warnings;
  ReportSpec spec;
  spec.title = d.experiment_title;
  spec.metadata = {{"run", record.run_id},
                   {"created", record.created_at},
                   {"seed", std::to_string(record.seed)},
                   {"framework version", record.framework_version},
                   {"descriptor hash", record.descriptor_hash},
                   {"driver", record.driver},
                   {"controller", d.experiment.manager},
                   {"inputs", fmt::format("{}", fmt::join(d.experiment.inputs, ", "))},
                   {"replications", std::to_string(d.experiment.replications)},
                   {"kubernetes", fmt::format("{} {} / {}", to_string(d.k8s.type),
                                              d.k8s.version, d.k8s.networkfabric)}};
  if (controller_meta.contains("synthetic") && controller_meta["synthetic"] == "true") {
    spec.metadata.push_back({"probe", "synthetic (modelled values, not measurements)"});
  }
  spec.figures = figures;
  spec.stats = stats;
  spec.failures = groups;
  write_file_atomic(dir / "report.tex", render_report(spec, dir));
  if (d.experiment.results_output == ResultsOutput::kPdf) {
    if (auto w = compile_pdf(dir)) warnings.push_back(*w);
  }
  return warnings;
}

}  // namespace edgebench
