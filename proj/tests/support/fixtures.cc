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

#include "support/fixtures.h"

#include <atomic>
#include <chrono>
#include <stdexcept>

#include <unistd.h>

#include "edgebench/controllers.h"
#include "edgebench/results.h"

namespace edgebench::testing {

namespace fs = std::filesystem;

fs::path source_dir() { return EDGEBENCH_SOURCE_DIR; }

fs::path catalog_dir() { return source_dir() / "catalog" / "apps"; }

std::string fig1_text() { return read_file(source_dir() / "experiments" / "fig1.exp"); }

ExperimentDescriptor fig1() { return parse_descriptor(fig1_text()); }

std::string with_line(std::string_view text, std::string_view key,
                      std::string_view new_value) {
  std::string out;
  bool found = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (line.starts_with(std::string(key) + "=")) {
      out += std::string(key) + "=" + std::string(new_value);
      found = true;
    } else {
      out += line;
    }
    if (end < text.size()) out += '\n';
    pos = end + 1;
  }
  if (!found) throw std::invalid_argument("no line for key " + std::string(key));
  return out;
}

const AppCatalog& catalog() {
  static const AppCatalog c = AppCatalog::load_dir(catalog_dir());
  return c;
}

SimulatedDriverOptions fast_sim(std::uint64_t seed) {
  SimulatedDriverOptions o;
  o.seed = seed;
  o.sleep = false;
  return o;
}

EngineOptions engine_options(const fs::path& out) {
  EngineOptions o;
  o.out_dir = out;
  o.clock = [] {
    return std::chrono::system_clock::time_point(std::chrono::seconds(1'790'000'000));
  };
  return o;
}

TempDir::TempDir(std::string_view tag) {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          ("edgebench-" + std::string(tag) + "-" + std::to_string(::getpid()) + "-" +
           std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

RunRecord run_fig1(const fs::path& out, std::uint64_t seed, const std::string& run_id) {
  const ExperimentDescriptor d = fig1();
  const RunPlan plan = plan_run(d, seed, run_id);
  SimulatedDriver driver(fast_sim(seed));
  const auto controllers = ControllerRegistry::builtin();
  return execute_run(plan, d, driver, controllers, catalog(), engine_options(out));
}

}  // namespace edgebench::testing
