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

// edgebench: run, validate, resume and report experiments from one
// descriptor file.
//
//   edgebench run fig1.exp --driver simulated --seed 42
//   edgebench validate fig1.exp
//   edgebench resume <run_id>
//   edgebench report <run_id>
//   edgebench catalog

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <fmt/core.h>
#include <fmt/ranges.h>

#include "CLI11.hpp"
#include "edgebench/compat.h"
#include "edgebench/controllers.h"
#include "edgebench/descriptor.h"
#include "edgebench/detectors.h"
#include "edgebench/infra.h"
#include "edgebench/orchestrator.h"
#include "edgebench/resource.h"
#include "edgebench/results.h"

namespace fs = std::filesystem;
using namespace edgebench;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailed = 1;
constexpr int kExitUsage = 2;

struct Flags {
  std::string descriptor;
  std::string run_id;
  std::optional<std::uint64_t> seed;
  std::string driver;
  std::string out;
  std::string catalog = std::string(EDGEBENCH_DEFAULT_CATALOG_DIR) + "/apps";
  std::string shell_config;
  std::optional<double> phase_timeout_s;
  std::string stop_after;
  int verbosity = 0;
};

fs::path out_dir(const Flags& f) {
  if (!f.out.empty()) return f.out;
  if (const char* env = std::getenv("EDGEBENCH_OUT"); env != nullptr && *env) {
    return env;
  }
  return ".";
}

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_text(const std::string& path) {
  try {
    return read_file(path);
  } catch (const std::exception& e) {
    throw UsageError(fmt::format("cannot read {}: {}", path, e.what()));
  }
}

std::unique_ptr<Driver> make_driver(const Flags& f, std::string_view infra_type,
                                    std::uint64_t seed) {
  const std::string id = f.driver.empty() ? std::string(infra_type) : f.driver;
  if (id == "simulated") {
    SimulatedDriverOptions o;
    o.seed = seed;
    return std::make_unique<SimulatedDriver>(o);
  }
  if (id == "shell" || id == "xcp-ng") {
    if (f.shell_config.empty()) {
      throw UsageError(fmt::format(
          "driver '{}' needs --shell-config <file.json>; use --driver simulated "
          "to run without real infrastructure",
          id));
    }
    return std::make_unique<ShellDriver>(
        ShellDriverConfig::from_json(read_text(f.shell_config)));
  }
  throw UsageError(fmt::format(
      "no driver for '{}' (available: simulated, shell, xcp-ng)", id));
}

EngineOptions engine_options(const Flags& f) {
  EngineOptions o;
  o.out_dir = out_dir(f);
  if (f.phase_timeout_s) {
    o.phase_timeout = std::chrono::milliseconds(
        static_cast<std::int64_t>(*f.phase_timeout_s * 1000.0));
  }
  o.stop_after = f.stop_after;
  if (f.verbosity > 0) {
    o.log = [](std::string_view line) { std::cerr << line << '\n'; };
  }
  return o;
}

void print_report(const ValidationReport& r) {
  for (const auto& e : r.errors) std::cout << "error: " << e.path << ": " << e.message << '\n';
  for (const auto& w : r.warnings) {
    std::cout << "warning: " << w.path << ": " << w.message << '\n';
  }
}

int print_record(const RunRecord& r, const fs::path& dir, int verbosity) {
  std::cout << "run " << r.run_id << " (seed " << r.seed << ")\n";
  for (const auto& p : r.phases) {
    std::cout << fmt::format("  {:<10} {}", to_string(p.status), p.id);
    if (!p.attempts.empty() && !p.attempts.back().message.empty()) {
      std::cout << ": " << p.attempts.back().message;
    }
    std::cout << '\n';
    if (verbosity > 1) {
      for (const auto& line : p.log) std::cout << "             " << line << '\n';
    }
  }
  for (const auto& w : r.warnings) std::cout << "warning: " << w << '\n';
  std::cout << "directory: " << dir.string() << '\n';
  return r.succeeded() ? kExitOk : kExitFailed;
}

ExperimentDescriptor load_descriptor(const std::string& path, ValidationReport& report) {
  std::vector<Finding> warnings;
  ExperimentDescriptor d = parse_descriptor(read_text(path), &warnings);
  report.warnings = warnings;
  return d;
}

int cmd_validate(const Flags& f) {
  ValidationReport parse_report;
  ExperimentDescriptor d;
  try {
    d = load_descriptor(f.descriptor, parse_report);
  } catch (const DescriptorError& e) {
    std::cout << "error: " << e.what() << '\n';
    return kExitFailed;
  }
  const AppCatalog catalog = AppCatalog::load_dir(f.catalog);
  auto compat = CompatibilityCatalog::builtin();
  compat.with_apps(catalog.scopes());
  ValidationReport report = validate(d, compat);
  report.warnings.insert(report.warnings.begin(), parse_report.warnings.begin(),
                         parse_report.warnings.end());
  print_report(report);
  if (!report.ok()) return kExitFailed;
  std::cout << "ok: " << d.experiment_title << '\n';
  return kExitOk;
}

int cmd_run(const Flags& f) {
  ValidationReport parse_report;
  ExperimentDescriptor d;
  try {
    d = load_descriptor(f.descriptor, parse_report);
  } catch (const DescriptorError& e) {
    std::cout << "error: " << e.what() << '\n';
    return kExitFailed;
  }
  const AppCatalog catalog = AppCatalog::load_dir(f.catalog);
  auto compat = CompatibilityCatalog::builtin();
  compat.with_apps(catalog.scopes());
  ValidationReport report = validate(d, compat);
  report.warnings.insert(report.warnings.begin(), parse_report.warnings.begin(),
                         parse_report.warnings.end());
  if (!report.ok() || f.verbosity > 0) print_report(report);
  if (!report.ok()) return kExitFailed;

  RunPlan plan = plan_run(d, f.seed);
  plan.run_id = make_run_id(d.experiment_title, std::chrono::system_clock::now(), plan.seed);
  auto driver = make_driver(f, d.infra.manager_type, plan.seed);
  const auto controllers = ControllerRegistry::builtin();
  const EngineOptions options = engine_options(f);
  const RunRecord r = execute_run(plan, d, *driver, controllers, catalog, options);
  return print_record(r, run_dir(options.out_dir, r.run_id), f.verbosity);
}

int cmd_resume(const Flags& f) {
  const EngineOptions options = engine_options(f);
  const fs::path dir = run_dir(options.out_dir, f.run_id);
  if (!fs::exists(dir / "descriptor.canonical")) {
    std::cout << "error: unknown run id " << f.run_id << " under "
              << options.out_dir.string() << '\n';
    return kExitFailed;
  }
  const ExperimentDescriptor d = parse_descriptor(read_file(dir / "descriptor.canonical"));
  const RunRecord before = record_from_json(read_file(dir / "record.json"));
  auto driver = make_driver(f, before.driver, before.seed);
  const AppCatalog catalog = AppCatalog::load_dir(f.catalog);
  const auto controllers = ControllerRegistry::builtin();
  const RunRecord r = resume_run(f.run_id, *driver, controllers, catalog, options);
  return print_record(r, dir, f.verbosity);
}

int cmd_report(const Flags& f) {
  const fs::path dir = run_dir(out_dir(f), f.run_id);
  if (!fs::exists(dir / "record.json")) {
    std::cout << "error: unknown run id " << f.run_id << '\n';
    return kExitFailed;
  }
  if (!fs::exists(dir / "results.csv")) {
    std::cout << "error: run " << f.run_id << " has no results.csv yet\n";
    return kExitFailed;
  }
  const ExperimentDescriptor d = parse_descriptor(read_file(dir / "descriptor.canonical"));
  const RunRecord r = record_from_json(read_file(dir / "record.json"));
  for (const auto& w : process_results(dir, d, r)) std::cout << "warning: " << w << '\n';
  std::cout << "report written to " << dir.string() << '\n';
  return kExitOk;
}

int cmd_catalog(const Flags& f) {
  const AppCatalog apps = AppCatalog::load_dir(f.catalog);
  const auto compat = CompatibilityCatalog::builtin();
  std::cout << "apps:\n";
  for (const auto& name : apps.names()) {
    const CatalogEntry* e = apps.find(name);
    std::vector<std::string> scopes;
    for (const auto s : e->allowed_scopes) scopes.emplace_back(to_string(s));
    std::cout << fmt::format("  {:<18} {} [{}] scopes: {}\n", name, e->description,
                             fmt::join(e->versions, ", "), fmt::join(scopes, ","));
  }
  std::cout << "controllers:\n";
  for (const auto& id : compat.controller_ids()) {
    const ControllerInfo* c = compat.find_controller(id);
    std::cout << fmt::format("  {:<18} {}\n", id, c->description);
    std::cout << fmt::format("  {:<18} metrics: {}\n", "", fmt::join(c->metrics, ", "));
  }
  std::cout << "detectors:\n";
  for (const auto k : all_detector_kinds()) {
    std::cout << "  " << to_string(k) << (is_online(k) ? "  (online)" : "  (offline)")
              << '\n';
  }
  std::cout << "distribution x network fabric:\n";
  for (const auto d : all_distros()) {
    std::cout << fmt::format("  {:<10} {}\n", to_string(d),
                             fmt::join(compat.fabrics(d), ", "));
  }
  std::cout << "infrastructure managers: " << fmt::format("{}", fmt::join(compat.infra_types(), ", "))
            << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"edgebench: declarative Kubernetes experiment runner"};
  app.set_version_flag("--version", std::string(EDGEBENCH_VERSION));
  app.require_subcommand(1, 1);
  Flags f;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--out", f.out, "output directory (default $EDGEBENCH_OUT or .)");
    sub->add_option("--catalog", f.catalog, "application catalog directory");
    sub->add_flag_function(
        "-v", [&](std::int64_t n) { f.verbosity = static_cast<int>(n); },
        "verbose output (-vv for phase logs)");
  };
  auto exec = [&](CLI::App* sub) {
    sub->add_option("--driver", f.driver, "override infra_manager_type (simulated, shell)");
    sub->add_option("--shell-config", f.shell_config, "JSON config for the shell driver");
    sub->add_option("--phase-timeout", f.phase_timeout_s, "per-phase timeout in seconds")
        ->check(CLI::PositiveNumber);
    sub->add_option("--stop-after", f.stop_after, "stop after this phase id succeeds");
  };

  CLI::App* run = app.add_subcommand("run", "run the full pipeline for a descriptor");
  run->add_option("descriptor", f.descriptor, "experiment descriptor")->required();
  run->add_option("--seed", f.seed, "seed (default: descriptor hash)");
  common(run);
  exec(run);

  CLI::App* val = app.add_subcommand("validate", "parse and validate a descriptor");
  val->add_option("descriptor", f.descriptor, "experiment descriptor")->required();
  common(val);

  CLI::App* res = app.add_subcommand("resume", "continue an interrupted run");
  res->add_option("run_id", f.run_id, "run id")->required();
  common(res);
  exec(res);

  CLI::App* rep = app.add_subcommand("report", "re-render a run's report from its samples");
  rep->add_option("run_id", f.run_id, "run id")->required();
  common(rep);

  CLI::App* cat = app.add_subcommand("catalog", "list apps, controllers, detectors and the matrix");
  common(cat);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*run) return cmd_run(f);
    if (*val) return cmd_validate(f);
    if (*res) return cmd_resume(f);
    if (*rep) return cmd_report(f);
    if (*cat) return cmd_catalog(f);
  } catch (const UsageError& e) {
    std::cerr << "edgebench: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "edgebench: " << e.what() << '\n';
    return kExitFailed;
  }
  return kExitUsage;
}
