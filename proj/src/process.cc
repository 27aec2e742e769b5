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

#include "edgebench/process.h"

#include <algorithm>
#include <future>
#include <sstream>
#include <system_error>
#include <thread>

#include <boost/process.hpp>

namespace edgebench {

namespace bp = boost::process;

CommandResult run_command(const std::string& command,
                          std::chrono::milliseconds timeout) {
  CommandResult result;
  bp::ipstream out_pipe;
  bp::ipstream err_pipe;
  std::error_code ec;
  bp::child child(bp::search_path("sh"), "-c", command, bp::std_in.close(),
                  bp::std_out > out_pipe, bp::std_err > err_pipe, ec);
  if (ec) {
    result.err = ec.message();
    return result;
  }
  const auto drain = [](bp::ipstream& in) {
    return std::async(std::launch::async, [&in] {
      std::ostringstream buf;
      buf << in.rdbuf();
      return buf.str();
    });
  };
  auto out = drain(out_pipe);
  auto err = drain(err_pipe);
  // child::wait_for relies on SIGCHLD delivery and can miss the exit when
  // other threads are running; poll instead.
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  auto pause = std::chrono::microseconds(200);
  while (child.running(ec)) {
    if (std::chrono::steady_clock::now() >= deadline) {
      result.timed_out = true;
      child.terminate(ec);
      break;
    }
    std::this_thread::sleep_for(pause);
    pause = std::min(pause * 2, std::chrono::microseconds(20'000));
  }
  result.out = out.get();
  result.err = err.get();
  result.exit_code = result.timed_out ? -1 : child.exit_code();
  return result;
}

std::string shell_quote(std::string_view s) {
  std::string out = "'";
  for (const char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out.push_back(c);
    }
  }
  out.push_back('\'');
  return out;
}

std::string render_command(std::string_view tmpl,
                           const std::map<std::string, std::string>& vars) {
  std::string out;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      const auto close = tmpl.find('}', i);
      if (close != std::string_view::npos) {
        const std::string name(tmpl.substr(i + 1, close - i - 1));
        const auto it = vars.find(name);
        if (it != vars.end()) {
          out += shell_quote(it->second);
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(tmpl[i++]);
  }
  return out;
}

bool on_path(std::string_view program) {
  return !bp::search_path(std::string(program)).empty();
}

}  // namespace edgebench
