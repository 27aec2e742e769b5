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

#ifndef EDGEBENCH_PROCESS_H_
#define EDGEBENCH_PROCESS_H_

#include <chrono>
#include <map>
#include <string>
#include <string_view>

namespace edgebench {

struct CommandResult {
  int exit_code = -1;
  bool timed_out = false;
  std::string out;
  std::string err;

  bool ok() const { return exit_code == 0 && !timed_out; }
};

// Runs `command` through /bin/sh -c, capturing stdout and stderr.
CommandResult run_command(const std::string& command,
                          std::chrono::milliseconds timeout =
                              std::chrono::minutes(10));

// Wraps `s` in single quotes for /bin/sh.
std::string shell_quote(std::string_view s);

// Replaces `{name}` placeholders with shell-quoted values. Unknown
// placeholders are left untouched.
std::string render_command(std::string_view tmpl,
                           const std::map<std::string, std::string>& vars);

// True when `program` resolves to an executable on PATH.
bool on_path(std::string_view program);

}  // namespace edgebench

#endif  // EDGEBENCH_PROCESS_H_
