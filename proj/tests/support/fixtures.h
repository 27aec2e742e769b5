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

#ifndef EDGEBENCH_TESTS_SUPPORT_FIXTURES_H_
#define EDGEBENCH_TESTS_SUPPORT_FIXTURES_H_

#include <filesystem>
#include <string>
#include <string_view>

#include "edgebench/descriptor.h"
#include "edgebench/infra.h"
#include "edgebench/orchestrator.h"
#include "edgebench/resource.h"

namespace edgebench::testing {

std::filesystem::path source_dir();
std::filesystem::path catalog_dir();
std::string fig1_text();
ExperimentDescriptor fig1();

// Replaces the whole `key=...` line of a descriptor text.
std::string with_line(std::string_view text, std::string_view key,
                      std::string_view new_value);

const AppCatalog& catalog();

SimulatedDriverOptions fast_sim(std::uint64_t seed = 0);

// Fixed clock, so that record timestamps do not depend on the host.
EngineOptions engine_options(const std::filesystem::path& out);

class TempDir {
 public:
  explicit TempDir(std::string_view tag = "t");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// experiments/fig1.exp with the simulated driver and the given seed, in `out`.
RunRecord run_fig1(const std::filesystem::path& out, std::uint64_t seed,
                   const std::string& run_id = "fig1");

}  // namespace edgebench::testing

#endif  // EDGEBENCH_TESTS_SUPPORT_FIXTURES_H_
