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


#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "edgebench/process.h"
#include "edgebench/results.h"
#include "support/fixtures.h"

namespace edgebench {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

CommandResult cli(const std::string& args, const std::string& env = "") {
  return run_command(env + " " + shell_quote(EDGEBENCH_CLI_PATH) + " " + args,
                     std::chrono::seconds(120));
}

std::string fig1_path() {
  return shell_quote((testing::source_dir() / "experiments" / "fig1.exp").string());
}

std::string after(const std::string& text, const std::string& prefix) {
  const auto pos = text.find(prefix);
  if (pos == std::string::npos) return "";
  const auto end = text.find('\n', pos);
  return text.substr(pos + prefix.size(), end - pos - prefix.size());
}

TEST(Cli, RunFig1WithSimulatedDriver) {
  TempDir out("cli-run");
  const auto r = cli("run " + fig1_path() + " --driver simulated --seed 42 --out " +
                     shell_quote(out.path().string()));
  ASSERT_EQ(r.exit_code, 0) << r.out << r.err;
  EXPECT_NE(r.out.find("run my_experiment-"), std::string::npos);
  EXPECT_NE(r.out.find("succeeded  process_results"), std::string::npos) << r.out;
  const fs::path dir = after(r.out, "directory: ");
  EXPECT_TRUE(fs::exists(dir / "results.csv"));
  EXPECT_TRUE(fs::exists(dir / "report.tex"));
  const std::string run_id = dir.filename().string();
  EXPECT_TRUE(run_id.ends_with("-42")) << run_id;

  const auto again = cli("resume " + run_id + " --out " + shell_quote(out.path().string()));
  EXPECT_EQ(again.exit_code, 0) << again.out << again.err;
  const auto rep = cli("report " + run_id + " --out " + shell_quote(out.path().string()));
  EXPECT_EQ(rep.exit_code, 0) << rep.out << rep.err;
}

TEST(Cli, OutputDirectoryFromEnvironment) {
  TempDir out("cli-env");
  const auto r = cli("run " + fig1_path() + " --driver simulated --seed 1",
                     "EDGEBENCH_OUT=" + shell_quote(out.path().string()));
  ASSERT_EQ(r.exit_code, 0) << r.out << r.err;
  EXPECT_TRUE(fs::exists(out.path() / "runs"));
}

TEST(Cli, ValidateReportsIncompatibleFabric) {
  TempDir dir("cli-validate");
  const auto bad = dir.path() / "bad.exp";
  write_file_atomic(bad, testing::with_line(
                             testing::with_line(testing::fig1_text(), "k8s_type", "k0s"),
                             "k8s_networkfabric", "flannel"));
  const auto r = cli("validate " + shell_quote(bad.string()));
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.out.find("k0s does not support flannel"), std::string::npos) << r.out;
  const auto good = cli("validate " + fig1_path());
  EXPECT_EQ(good.exit_code, 0) << good.out;
  EXPECT_NE(good.out.find("ok: my_experiment"), std::string::npos);
  EXPECT_NE(good.out.find("warning: password"), std::string::npos);
}

TEST(Cli, RunRejectsInvalidDescriptor) {
  TempDir dir("cli-invalid");
  const auto bad = dir.path() / "bad.exp";
  write_file_atomic(bad, testing::with_line(testing::fig1_text(), "master_macs",
                                            "[\"66:16:91:ec:09\"]"));
  const auto r = cli("run " + shell_quote(bad.string()) + " --driver simulated --out " +
                     shell_quote(dir.path().string()));
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.out.find("invalid MAC address"), std::string::npos) << r.out;
  EXPECT_FALSE(fs::exists(dir.path() / "runs"));
}

TEST(Cli, CatalogListsDetectorsAndApps) {
  const auto r = cli("catalog");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  for (const char* id : {"tcusum", "rt-cusum", "pcusum", "rbocp", "offline-cusum", "docker",
                         "edgenet-prereqs", "cni-plugins", "anomaly-detection"}) {
    EXPECT_NE(r.out.find(id), std::string::npos) << id;
  }
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(cli("").exit_code, 2);
  EXPECT_EQ(cli("frobnicate").exit_code, 2);
  EXPECT_EQ(cli("run").exit_code, 2);
  EXPECT_EQ(cli("run " + fig1_path() + " --phase-timeout -3").exit_code, 2);
  // xcp-ng needs a shell config to reach a real manager.
  TempDir out("cli-usage");
  const auto r = cli("run " + fig1_path() + " --out " + shell_quote(out.path().string()));
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.err.find("--driver simulated"), std::string::npos) << r.err;
  EXPECT_EQ(cli("--help").exit_code, 0);
}

TEST(Cli, UnknownRunId) {
  TempDir out("cli-unknown");
  const auto r = cli("resume nope --out " + shell_quote(out.path().string()));
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.out.find("unknown run id nope"), std::string::npos);
}

}  // namespace
}  // namespace edgebench
