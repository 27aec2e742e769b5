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

#include "edgebench/descriptor.h"

#include <arpa/inet.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <fmt/core.h>

namespace edgebench {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

struct RawValue {
  int line = 0;
  bool is_list = false;
  std::string scalar;
  std::vector<std::string> items;
  std::string text;  // trimmed source text of the value
};

// Strips a trailing comment, honouring double quotes.
std::string_view strip_comment(std::string_view line) {
  bool in_quote = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_quote && c == '\\') {
      ++i;
      continue;
    }
    if (c == '"') in_quote = !in_quote;
    if (c == '#' && !in_quote) return line.substr(0, i);
  }
  return line;
}

// Reads a quoted string starting at s[pos] == '"'. Advances pos past the
// closing quote.
std::string read_quoted(std::string_view s, std::size_t& pos, int line_no,
                        const std::string& key) {
  std::string out;
  ++pos;
  while (pos < s.size()) {
    const char c = s[pos];
    if (c == '\\') {
      if (pos + 1 >= s.size()) break;
      const char e = s[pos + 1];
      if (e != '"' && e != '\\') {
        throw DescriptorError(line_no, key,
                              fmt::format("unsupported escape '\\{}'", e));
      }
      out.push_back(e);
      pos += 2;
      continue;
    }
    if (c == '"') {
      ++pos;
      return out;
    }
    out.push_back(c);
    ++pos;
  }
  throw DescriptorError(line_no, key, "unterminated string");
}

RawValue parse_value(std::string_view text, int line_no,
                     const std::string& key) {
  RawValue v;
  v.line = line_no;
  v.text = std::string(text);
  if (text.empty()) return v;

  if (text.front() == '"') {
    std::size_t pos = 0;
    v.scalar = read_quoted(text, pos, line_no, key);
    if (!trim(text.substr(pos)).empty()) {
      throw DescriptorError(line_no, key, "unexpected text after string");
    }
    return v;
  }

  if (text.front() == '[') {
    v.is_list = true;
    if (text.back() != ']') {
      throw DescriptorError(line_no, key, "unterminated list");
    }
    const std::string_view body = text.substr(1, text.size() - 2);
    std::size_t pos = 0;
    auto skip_ws = [&] {
      while (pos < body.size() &&
             std::isspace(static_cast<unsigned char>(body[pos]))) {
        ++pos;
      }
    };
    skip_ws();
    if (pos == body.size()) return v;
    while (true) {
      skip_ws();
      if (pos >= body.size() || body[pos] != '"') {
        throw DescriptorError(line_no, key,
                              "list items must be double-quoted strings");
      }
      v.items.push_back(read_quoted(body, pos, line_no, key));
      skip_ws();
      if (pos == body.size()) break;
      if (body[pos] != ',') {
        throw DescriptorError(line_no, key, "expected ',' between list items");
      }
      ++pos;
    }
    return v;
  }

  for (const char c : text) {
    if (std::isspace(static_cast<unsigned char>(c)) || c == '"' || c == '[' ||
        c == ']' || c == ',') {
      throw DescriptorError(
          line_no, key,
          fmt::format("bare value '{}' must not contain whitespace, quotes, "
                      "brackets or commas",
                      text));
    }
  }
  v.scalar = std::string(text);
  return v;
}

bool is_key_char(char c, bool first) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' ||
         (!first && std::isdigit(static_cast<unsigned char>(c)));
}

// --- typed extraction -----------------------------------------------------

std::string want_string(const std::string& key, const RawValue& v) {
  if (v.is_list) {
    throw DescriptorError(v.line, key, "expected a string, found a list");
  }
  return v.scalar;
}

std::vector<std::string> want_list(const std::string& key, const RawValue& v) {
  if (!v.is_list) {
    throw DescriptorError(v.line, key, "expected a list, found a scalar");
  }
  return v.items;
}

bool want_bool(const std::string& key, const RawValue& v) {
  const std::string s = lower(want_string(key, v));
  if (s == "true") return true;
  if (s == "false") return false;
  throw DescriptorError(v.line, key,
                        fmt::format("expected true or false, found '{}'",
                                    v.scalar));
}

std::int64_t want_int(const std::string& key, const RawValue& v) {
  const std::string s = want_string(key, v);
  std::int64_t out = 0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, out);
  if (s.empty() || ec != std::errc() || ptr != end) {
    throw DescriptorError(v.line, key,
                          fmt::format("expected an integer, found '{}'", s));
  }
  return out;
}

using Setter = std::function<void(ExperimentDescriptor&, const std::string&,
                                  const RawValue&)>;

struct KeySpec {
  std::string_view key;
  bool required;
  Setter set;
};

const std::vector<KeySpec>& key_table() {
  static const std::vector<KeySpec> kKeys = {
      {"experiment_title", true,
       [](auto& d, const auto& k, const auto& v) {
         d.experiment_title = want_string(k, v);
       }},
      {"username", false,
       [](auto& d, const auto& k, const auto& v) {
         d.username = want_string(k, v);
       }},
      {"password", false,
       [](auto& d, const auto& k, const auto& v) {
         d.password = Secret::from_encoded(want_string(k, v));
       }},
      {"infra_manager_ip", false,
       [](auto& d, const auto& k, const auto& v) {
         d.infra.manager_ip = want_string(k, v);
       }},
      {"infra_manager_name", false,
       [](auto& d, const auto& k, const auto& v) {
         d.infra.manager_name = want_string(k, v);
       }},
      {"infra_manager_type", true,
       [](auto& d, const auto& k, const auto& v) {
         d.infra.manager_type = want_string(k, v);
       }},
      {"use_snapshots", false,
       [](auto& d, const auto& k, const auto& v) {
         d.infra.use_snapshots = want_bool(k, v);
       }},
      {"node_osimage", true,
       [](auto& d, const auto& k, const auto& v) {
         d.infra.node_osimage = want_string(k, v);
       }},
      {"master_hosts", true,
       [](auto& d, const auto& k, const auto& v) {
         d.masters.hosts = want_list(k, v);
       }},
      {"master_ips", true,
       [](auto& d, const auto& k, const auto& v) {
         d.masters.ips = want_list(k, v);
       }},
      {"master_macs", true,
       [](auto& d, const auto& k, const auto& v) {
         d.masters.macs = want_list(k, v);
       }},
      {"worker_hosts", false,
       [](auto& d, const auto& k, const auto& v) {
         d.workers.hosts = want_list(k, v);
       }},
      {"worker_ips", false,
       [](auto& d, const auto& k, const auto& v) {
         d.workers.ips = want_list(k, v);
       }},
      {"worker_macs", false,
       [](auto& d, const auto& k, const auto& v) {
         d.workers.macs = want_list(k, v);
       }},
      {"k8s_type", true,
       [](auto& d, const auto& k, const auto& v) {
         const std::string s = want_string(k, v);
         const auto distro = parse_distro(s);
         if (!distro) {
           throw DescriptorError(v.line, k,
                                 fmt::format("unknown k8s_type '{}'", s));
         }
         d.k8s.type = *distro;
       }},
      {"k8s_scheduler", false,
       [](auto& d, const auto& k, const auto& v) {
         d.k8s.scheduler = want_string(k, v);
       }},
      {"k8s_networkfabric", true,
       [](auto& d, const auto& k, const auto& v) {
         d.k8s.networkfabric = want_string(k, v);
       }},
      {"k8s_version", false,
       [](auto& d, const auto& k, const auto& v) {
         d.k8s.version = want_string(k, v);
       }},
      {"app_names", false,
       [](auto& d, const auto& k, const auto& v) {
         d.apps.names = want_list(k, v);
       }},
      {"app_scopes", false,
       [](auto& d, const auto& k, const auto& v) {
         d.apps.scopes.clear();
         for (const auto& s : want_list(k, v)) {
           const auto scope = parse_scope(s);
           if (!scope) {
             throw DescriptorError(v.line, k,
                                   fmt::format("unknown app scope '{}'", s));
           }
           d.apps.scopes.push_back(*scope);
         }
       }},
      {"exp_manager", true,
       [](auto& d, const auto& k, const auto& v) {
         d.experiment.manager = want_string(k, v);
       }},
      {"exp_input", true,
       [](auto& d, const auto& k, const auto& v) {
         d.experiment.inputs = want_list(k, v);
       }},
      {"exp_metrics", false,
       [](auto& d, const auto& k, const auto& v) {
         d.experiment.metrics = want_list(k, v);
       }},
      {"replications_number", true,
       [](auto& d, const auto& k, const auto& v) {
         d.experiment.replications = want_int(k, v);
       }},
      {"results_output", false,
       [](auto& d, const auto& k, const auto& v) {
         const std::string s = want_string(k, v);
         const auto out = parse_results_output(s);
         if (!out) {
           throw DescriptorError(
               v.line, k,
               fmt::format("results_output must be PDF, TEX or NONE, found "
                           "'{}'",
                           s));
         }
         d.experiment.results_output = *out;
       }},
      {"exp_options", false,
       [](auto& d, const auto& k, const auto& v) {
         d.experiment.options.clear();
         for (const auto& item : want_list(k, v)) {
           const auto eq = item.find('=');
           if (eq == std::string::npos || eq == 0) {
             throw DescriptorError(
                 v.line, k,
                 fmt::format("option '{}' is not of the form name=value",
                             item));
           }
           d.experiment.options.emplace_back(item.substr(0, eq),
                                             item.substr(eq + 1));
         }
       }},
  };
  return kKeys;
}

std::string quote(std::string_view s) {
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string quote_list(const std::vector<std::string>& items) {
  std::string out = "[";
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += quote(items[i]);
  }
  out += "]";
  return out;
}

bool filesystem_safe(std::string_view s) {
  if (s.empty() || s == "." || s == "..") return false;
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '-' || c == '.';
  });
}

}  // namespace

DescriptorError::DescriptorError(int line, std::string key,
                                 const std::string& message)
    : std::runtime_error(line > 0 ? fmt::format("line {}: {}", line, message)
                                  : message),
      line_(line),
      key_(std::move(key)) {}

std::string_view to_string(ResultsOutput r) {
  switch (r) {
    case ResultsOutput::kPdf:
      return "PDF";
    case ResultsOutput::kTex:
      return "TEX";
    case ResultsOutput::kNone:
      return "NONE";
  }
  return "NONE";
}

std::optional<ResultsOutput> parse_results_output(std::string_view s) {
  const std::string v = lower(s);
  if (v == "pdf") return ResultsOutput::kPdf;
  if (v == "tex") return ResultsOutput::kTex;
  if (v == "none") return ResultsOutput::kNone;
  return std::nullopt;
}

std::vector<NodeSpec> NodeGroup::nodes() const {
  const std::size_t n = std::min({hosts.size(), ips.size(), macs.size()});
  std::vector<NodeSpec> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back({hosts[i], ips[i], macs[i]});
  return out;
}

std::vector<AppRequest> AppSection::requests() const {
  const std::size_t n = std::min(names.size(), scopes.size());
  std::vector<AppRequest> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    AppRequest r;
    const auto at = names[i].find('@');
    r.name = names[i].substr(0, at);
    r.version = at == std::string::npos ? "latest" : names[i].substr(at + 1);
    r.scope = scopes[i];
    out.push_back(std::move(r));
  }
  return out;
}

ExperimentDescriptor parse_descriptor(std::string_view text,
                                      std::vector<Finding>* warnings) {
  ExperimentDescriptor d;
  std::map<std::string, RawValue, std::less<>> seen;
  std::vector<std::string> order;

  int line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t nl = text.find('\n', start);
    const std::string_view raw_line =
        text.substr(start, nl == std::string_view::npos ? text.npos
                                                        : nl - start);
    start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    const std::string_view line = trim(strip_comment(raw_line));
    if (line.empty()) continue;

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw DescriptorError(line_no, "", "expected key=value");
    }
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty() || !is_key_char(key.front(), true) ||
        !std::all_of(key.begin(), key.end(),
                     [](char c) { return is_key_char(c, false); })) {
      throw DescriptorError(line_no, key,
                            fmt::format("invalid key '{}'", key));
    }
    if (seen.contains(key)) {
      throw DescriptorError(
          line_no, key,
          fmt::format("duplicate key {} (first set on line {})", key,
                      seen[key].line));
    }
    seen[key] = parse_value(trim(line.substr(eq + 1)), line_no, key);
    order.push_back(key);
  }

  const auto& table = key_table();
  for (const auto& spec : table) {
    const auto it = seen.find(spec.key);
    if (it == seen.end()) {
      if (spec.required) {
        throw DescriptorError(0, std::string(spec.key),
                              fmt::format("missing required key {}", spec.key));
      }
      continue;
    }
    spec.set(d, it->first, it->second);
  }
  for (const auto& key : order) {
    const bool known = std::any_of(table.begin(), table.end(),
                                   [&](const KeySpec& s) { return s.key == key; });
    if (known) continue;
    const RawValue& v = seen[key];
    d.extras.emplace_back(key, v.text);
    if (warnings) {
      warnings->push_back(
          {key, fmt::format("line {}: unknown key {} ignored", v.line, key)});
    }
  }
  return d;
}

std::string serialize_descriptor(const ExperimentDescriptor& d) {
  std::ostringstream out;
  out << "# generic configuration\n";
  out << "experiment_title=" << quote(d.experiment_title) << "\n";
  out << "username=" << quote(d.username) << "\n";
  out << "password=" << quote(d.password.encoded()) << "\n";
  out << "# infrastructure configuration\n";
  out << "infra_manager_ip=" << quote(d.infra.manager_ip) << "\n";
  out << "infra_manager_name=" << quote(d.infra.manager_name) << "\n";
  out << "infra_manager_type=" << quote(d.infra.manager_type) << "\n";
  out << "use_snapshots=" << (d.infra.use_snapshots ? "true" : "false") << "\n";
  out << "node_osimage=" << quote(d.infra.node_osimage) << "\n";
  out << "master_hosts=" << quote_list(d.masters.hosts) << "\n";
  out << "master_ips=" << quote_list(d.masters.ips) << "\n";
  out << "master_macs=" << quote_list(d.masters.macs) << "\n";
  out << "worker_hosts=" << quote_list(d.workers.hosts) << "\n";
  out << "worker_ips=" << quote_list(d.workers.ips) << "\n";
  out << "worker_macs=" << quote_list(d.workers.macs) << "\n";
  out << "# kubernetes configuration\n";
  out << "k8s_type=" << to_string(d.k8s.type) << "\n";
  out << "k8s_scheduler=" << quote(d.k8s.scheduler) << "\n";
  out << "k8s_networkfabric=" << quote(d.k8s.networkfabric) << "\n";
  out << "k8s_version=" << quote(d.k8s.version) << "\n";
  out << "# application configuration\n";
  out << "app_names=" << quote_list(d.apps.names) << "\n";
  std::vector<std::string> scopes;
  for (const auto s : d.apps.scopes) scopes.emplace_back(to_string(s));
  out << "app_scopes=" << quote_list(scopes) << "\n";
  out << "# experiment definition\n";
  out << "exp_manager=" << quote(d.experiment.manager) << "\n";
  out << "exp_input=" << quote_list(d.experiment.inputs) << "\n";
  out << "exp_metrics=" << quote_list(d.experiment.metrics) << "\n";
  out << "replications_number=" << d.experiment.replications << "\n";
  out << "results_output=" << quote(to_string(d.experiment.results_output))
      << "\n";
  if (!d.experiment.options.empty()) {
    std::vector<std::string> opts;
    for (const auto& [k, v] : d.experiment.options) opts.push_back(k + "=" + v);
    out << "exp_options=" << quote_list(opts) << "\n";
  }
  if (!d.extras.empty()) {
    out << "# unrecognized keys\n";
    for (const auto& [k, v] : d.extras) out << k << "=" << v << "\n";
  }
  return out.str();
}

bool is_valid_mac(std::string_view mac) {
  if (mac.size() != 17) return false;
  for (std::size_t i = 0; i < mac.size(); ++i) {
    if (i % 3 == 2) {
      if (mac[i] != ':') return false;
    } else if (!std::isxdigit(static_cast<unsigned char>(mac[i]))) {
      return false;
    }
  }
  return true;
}

bool is_valid_ipv4(std::string_view ip) {
  in_addr addr{};
  const std::string s(ip);
  return inet_pton(AF_INET, s.c_str(), &addr) == 1;
}

ValidationReport validate(const ExperimentDescriptor& d,
                          const CompatibilityCatalog& catalog) {
  ValidationReport r;
  auto error = [&](std::string path, std::string msg) {
    r.errors.push_back({std::move(path), std::move(msg)});
  };
  auto warn = [&](std::string path, std::string msg) {
    r.warnings.push_back({std::move(path), std::move(msg)});
  };

  if (!filesystem_safe(d.experiment_title)) {
    error("experiment_title",
          fmt::format("'{}' is not a filesystem-safe identifier "
                      "(letters, digits, '.', '_', '-')",
                      d.experiment_title));
  }
  if (d.password.is_placeholder()) {
    warn("password", "value is not base64 and is treated as a literal");
  }

  if (!d.infra.manager_ip.empty() && !is_valid_ipv4(d.infra.manager_ip)) {
    error("infra_manager_ip",
          fmt::format("invalid IPv4 address '{}'", d.infra.manager_ip));
  }
  if (!catalog.knows_infra_type(d.infra.manager_type)) {
    warn("infra_manager_type",
         fmt::format("no built-in driver named '{}'", d.infra.manager_type));
  }
  if (d.infra.node_osimage.empty()) error("node_osimage", "must not be empty");

  // Nodes.
  if (d.masters.hosts.empty()) {
    error("master_hosts", "at least one master node is required");
  }
  auto check_lengths = [&](const NodeGroup& g, std::string_view role) {
    const std::size_t n = g.hosts.size();
    if (g.ips.size() != n) {
      error(fmt::format("{}_ips", role),
            fmt::format("{}_hosts has {} entries but {}_ips has {}", role, n,
                        role, g.ips.size()));
    }
    if (g.macs.size() != n) {
      error(fmt::format("{}_macs", role),
            fmt::format("{}_hosts has {} entries but {}_macs has {}", role, n,
                        role, g.macs.size()));
    }
  };
  check_lengths(d.masters, "master");
  check_lengths(d.workers, "worker");

  std::map<std::string, std::string> ips_seen;
  std::map<std::string, std::string> macs_seen;
  std::map<std::string, std::string> hosts_seen;
  auto check_group = [&](const NodeGroup& g, std::string_view role) {
    for (std::size_t i = 0; i < g.hosts.size(); ++i) {
      const std::string path = fmt::format("{}_hosts[{}]", role, i);
      if (g.hosts[i].empty()) error(path, "empty host name");
      if (!hosts_seen.emplace(g.hosts[i], path).second) {
        error(path, fmt::format("duplicate host name {}", g.hosts[i]));
      }
    }
    for (std::size_t i = 0; i < g.ips.size(); ++i) {
      const std::string path = fmt::format("{}_ips[{}]", role, i);
      if (!is_valid_ipv4(g.ips[i])) {
        error(path, fmt::format("invalid IPv4 address '{}'", g.ips[i]));
      } else if (!ips_seen.emplace(g.ips[i], path).second) {
        error(path, fmt::format("duplicate node IP {} (also at {})", g.ips[i],
                                ips_seen[g.ips[i]]));
      }
    }
    for (std::size_t i = 0; i < g.macs.size(); ++i) {
      const std::string path = fmt::format("{}_macs[{}]", role, i);
      if (!is_valid_mac(g.macs[i])) {
        error(path, fmt::format("invalid MAC address '{}'", g.macs[i]));
      } else if (!macs_seen.emplace(lower(g.macs[i]), path).second) {
        error(path, fmt::format("duplicate MAC address {}", g.macs[i]));
      }
    }
  };
  check_group(d.masters, "master");
  check_group(d.workers, "worker");

  // Kubernetes flavour x fabric.
  if (!catalog.supports(d.k8s.type, d.k8s.networkfabric)) {
    error("k8s_networkfabric",
          fmt::format("{} does not support {}", to_string(d.k8s.type),
                      d.k8s.networkfabric));
  }
  if (d.k8s.version.empty()) error("k8s_version", "must not be empty");

  // Applications.
  if (d.apps.names.size() != d.apps.scopes.size()) {
    error("app_scopes",
          fmt::format("app_names has {} entries but app_scopes has {}",
                      d.apps.names.size(), d.apps.scopes.size()));
  }
  if (catalog.has_app_list()) {
    const auto requests = d.apps.requests();
    for (std::size_t i = 0; i < requests.size(); ++i) {
      const auto* scopes = catalog.find_app(requests[i].name);
      if (!scopes) {
        error(fmt::format("app_names[{}]", i),
              fmt::format("unknown app '{}'", requests[i].name));
      } else if (!scopes->contains(requests[i].scope)) {
        error(fmt::format("app_scopes[{}]", i),
              fmt::format("app {} cannot be deployed with scope {}",
                          requests[i].name, to_string(requests[i].scope)));
      }
    }
  }

  // Experiment.
  const ExpSection& e = d.experiment;
  if (e.replications < 1) {
    error("replications_number",
          fmt::format("must be >= 1, found {}", e.replications));
  }
  const ControllerInfo* ctl = catalog.find_controller(e.manager);
  if (!ctl) {
    std::string avail;
    for (const auto& id : catalog.controller_ids()) {
      avail += avail.empty() ? id : ", " + id;
    }
    error("exp_manager", fmt::format("unknown experiment controller '{}' "
                                     "(available: {})",
                                     e.manager, avail));
    return r;
  }
  if (e.inputs.empty()) error("exp_input", "at least one input is required");
  for (std::size_t i = 0; i < e.inputs.size(); ++i) {
    const std::string path = fmt::format("exp_input[{}]", i);
    if (ctl->input_kind == InputKind::kCniTarget) {
      const auto target = parse_cni_input(e.inputs[i]);
      if (!target) {
        error(path, fmt::format("'{}' is not of the form <distro>-<plugin>",
                                e.inputs[i]));
      } else if (!catalog.supports(target->distro, target->fabric)) {
        error(path, fmt::format("{} does not support {}",
                                to_string(target->distro), target->fabric));
      }
    } else {
      const auto& allowed = ctl->allowed_inputs;
      if (std::find(allowed.begin(), allowed.end(), e.inputs[i]) ==
          allowed.end()) {
        error(path, fmt::format("unknown detector '{}'", e.inputs[i]));
      }
    }
  }
  if (e.metrics.empty()) {
    warn("exp_metrics", fmt::format("no metrics listed; {} reports all of its "
                                    "metrics",
                                    ctl->id));
  }
  for (std::size_t i = 0; i < e.metrics.size(); ++i) {
    if (std::find(ctl->metrics.begin(), ctl->metrics.end(), e.metrics[i]) ==
        ctl->metrics.end()) {
      error(fmt::format("exp_metrics[{}]", i),
            fmt::format("controller {} does not provide metric '{}'", ctl->id,
                        e.metrics[i]));
    }
  }
  return r;
}

std::uint64_t descriptor_hash(const ExperimentDescriptor& d) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : serialize_descriptor(d)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace edgebench
