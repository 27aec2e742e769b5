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

#include "edgebench/results.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include <boost/math/distributions/students_t.hpp>
#include <fmt/core.h>

#include "edgebench/process.h"
#include "json.hpp"

namespace edgebench {
namespace {

using GroupKey = std::tuple<std::string, std::string, std::string>;

std::string shortest(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

std::string fixed(double v, int digits = 2) {
  // Avoid "-0.00" so byte output does not depend on rounding of tiny values.
  const std::string s = fmt::format("{:.{}f}", v, digits);
  if (s.find_first_not_of("-0.") == std::string::npos) {
    return fmt::format("{:.{}f}", 0.0, digits);
  }
  return s;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (const char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

double nice_step(double range, int target_ticks) {
  const double raw = range / target_ticks;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double norm = raw / mag;
  const double nice = norm <= 1.0 ? 1.0 : norm <= 2.0 ? 2.0 : norm <= 5.0 ? 5.0 : 10.0;
  return nice * mag;
}

// Colour-blind-safe palette; repeats beyond ten inputs.
constexpr const char* kPalette[] = {"#4477aa", "#ee6677", "#228833", "#ccbb44",
                                    "#66ccee", "#aa3377", "#bbbbbb", "#332288",
                                    "#44aa99", "#882255"};

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::vector<std::string>> parse_csv_records(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        records.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  if (quoted) throw ResultsError("unterminated quoted CSV field");
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    records.push_back(std::move(row));
  }
  return records;
}

}  // namespace

double t_quantile_975(std::int64_t df) {
  if (df < 1) throw ResultsError("t quantile needs df >= 1");
  const boost::math::students_t dist(static_cast<double>(df));
  return boost::math::quantile(dist, 0.975);
}

std::vector<SummaryStats> aggregate(std::span<const MetricSample> samples,
                                    std::span<const SampleFailure> failures) {
  std::map<GroupKey, std::vector<const MetricSample*>> groups;
  for (const auto& s : samples) {
    groups[{s.metric, s.condition, s.input}].push_back(&s);
  }
  std::vector<SummaryStats> out;
  for (auto& [key, rows] : groups) {
    SummaryStats st;
    std::tie(st.metric, st.condition, st.input) = key;
    st.unit = rows.front()->unit;
    // Sum in value order so the result does not depend on input order.
    std::vector<double> values;
    for (const auto* r : rows) {
      if (r->unit != st.unit) {
        throw ResultsError(fmt::format("group {}/{}/{} mixes units {} and {}",
                                       st.metric, st.condition, st.input, st.unit,
                                       r->unit));
      }
      values.push_back(r->value);
    }
    std::sort(values.begin(), values.end());
    st.count = static_cast<std::int64_t>(values.size());
    double sum = 0.0;
    for (const double v : values) sum += v;
    st.mean = sum / static_cast<double>(st.count);
    st.min = values.front();
    st.max = values.back();
    if (st.count > 1) {
      double ss = 0.0;
      for (const double v : values) ss += (v - st.mean) * (v - st.mean);
      st.stddev = std::sqrt(ss / static_cast<double>(st.count - 1));
      st.ci_half_width = t_quantile_975(st.count - 1) * st.stddev /
                         std::sqrt(static_cast<double>(st.count));
    }
    std::set<std::int64_t> failed;
    for (const auto& f : failures) {
      if ((f.metric.empty() || f.metric == st.metric) &&
          f.condition == st.condition && f.input == st.input) {
        failed.insert(f.replication);
      }
    }
    st.failed_replications = static_cast<std::int64_t>(failed.size());
    out.push_back(std::move(st));
  }
  return out;
}

std::vector<FailureGroup> failure_groups(std::span<const SampleFailure> failures) {
  std::map<GroupKey, std::pair<std::set<std::int64_t>, std::set<std::string>>> g;
  for (const auto& f : failures) {
    auto& [reps, reasons] = g[{f.metric, f.condition, f.input}];
    reps.insert(f.replication);
    reasons.insert(f.reason);
  }
  std::vector<FailureGroup> out;
  for (const auto& [key, v] : g) {
    FailureGroup fg;
    std::tie(fg.metric, fg.condition, fg.input) = key;
    fg.replications = static_cast<std::int64_t>(v.first.size());
    fg.reasons.assign(v.second.begin(), v.second.end());
    out.push_back(std::move(fg));
  }
  return out;
}

std::string chart_file_name(std::string_view metric) {
  return fmt::format("plots/{}-all.svg", metric);
}

std::string render_bar_chart(std::span<const SummaryStats> stats,
                             std::string_view metric, const ChartLayout& layout) {
  std::vector<const SummaryStats*> rows;
  for (const auto& s : stats) {
    if (s.metric == metric) rows.push_back(&s);
  }
  if (rows.empty()) throw ResultsError(fmt::format("no statistics for {}", metric));

  std::vector<std::string> conditions;
  std::vector<std::string> inputs;
  for (const auto* r : rows) {
    if (std::find(conditions.begin(), conditions.end(), r->condition) == conditions.end()) {
      conditions.push_back(r->condition);
    }
    if (std::find(inputs.begin(), inputs.end(), r->input) == inputs.end()) {
      inputs.push_back(r->input);
    }
  }
  std::sort(conditions.begin(), conditions.end());
  std::sort(inputs.begin(), inputs.end());

  double hi = 0.0;
  double lo = 0.0;
  for (const auto* r : rows) {
    hi = std::max(hi, r->mean + r->ci_half_width);
    lo = std::min(lo, r->mean - r->ci_half_width);
  }
  if (hi - lo <= 0.0) hi = 1.0;
  const double step = nice_step(hi - lo, 5);
  const double y_top = std::ceil(hi / step) * step;
  const double y_bottom = std::floor(lo / step) * step;

  const double left = 80.0;
  const double right = 190.0;
  const double top = 50.0;
  const double bottom = 70.0;
  const double pw = layout.width - left - right;
  const double ph = layout.height - top - bottom;
  const auto ypos = [&](double v) {
    return top + ph * (y_top - v) / (y_top - y_bottom);
  };
  const std::string unit = rows.front()->unit;
  const std::string title =
      layout.title.empty() ? std::string(metric) : layout.title;

  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
      "viewBox=\"0 0 {0} {1}\" font-family=\"Helvetica, Arial, sans-serif\" "
      "font-size=\"12\">\n",
      layout.width, layout.height);
  svg += fmt::format("<rect width=\"{}\" height=\"{}\" fill=\"#ffffff\"/>\n",
                     layout.width, layout.height);
  svg += fmt::format(
      "<text x=\"{}\" y=\"28\" text-anchor=\"middle\" font-size=\"16\">{}</text>\n",
      fixed(left + pw / 2), xml_escape(title));

  // Grid and y axis.
  for (double v = y_bottom; v <= y_top + step / 2; v += step) {
    const double y = ypos(v);
    svg += fmt::format(
        "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"#dddddd\"/>\n",
        fixed(left), fixed(y), fixed(left + pw));
    svg += fmt::format(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n", fixed(left - 6),
        fixed(y + 4), xml_escape(fmt::format("{:g}", std::abs(v) < step / 1e6 ? 0.0 : v)));
  }
  svg += fmt::format(
      "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"#000000\"/>\n",
      fixed(left), fixed(top), fixed(top + ph));
  svg += fmt::format(
      "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"#000000\"/>\n",
      fixed(left), fixed(ypos(0.0)), fixed(left + pw));
  svg += fmt::format(
      "<text x=\"20\" y=\"{0}\" text-anchor=\"middle\" "
      "transform=\"rotate(-90 20 {0})\">{1}</text>\n",
      fixed(top + ph / 2), xml_escape(fmt::format("{} ({})", metric, unit)));

  // Bars.
  const double group_w = pw / static_cast<double>(conditions.size());
  const double bar_w = group_w * 0.8 / static_cast<double>(inputs.size());
  for (std::size_t ci = 0; ci < conditions.size(); ++ci) {
    const double gx = left + group_w * static_cast<double>(ci) + group_w * 0.1;
    svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
                       fixed(left + group_w * (static_cast<double>(ci) + 0.5)),
                       fixed(top + ph + 20), xml_escape(conditions[ci]));
    for (std::size_t ii = 0; ii < inputs.size(); ++ii) {
      const auto it = std::find_if(rows.begin(), rows.end(), [&](const SummaryStats* r) {
        return r->condition == conditions[ci] && r->input == inputs[ii];
      });
      if (it == rows.end()) continue;
      const SummaryStats& r = **it;
      const double x = gx + bar_w * static_cast<double>(ii);
      const double y0 = ypos(std::max(0.0, r.mean));
      const double y1 = ypos(std::min(0.0, r.mean));
      svg += fmt::format(
          "<rect class=\"bar\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" "
          "fill=\"{}\"><title>{}</title></rect>\n",
          fixed(x), fixed(y0), fixed(bar_w * 0.9), fixed(y1 - y0),
          kPalette[ii % std::size(kPalette)],
          xml_escape(fmt::format("{} / {}: {} {} (n={})", r.condition, r.input,
                                 fixed(r.mean, 3), r.unit, r.count)));
      if (r.ci_half_width > 0.0) {
        const double cx = x + bar_w * 0.45;
        const double ya = ypos(r.mean + r.ci_half_width);
        const double yb = ypos(r.mean - r.ci_half_width);
        svg += fmt::format(
            "<path class=\"errorbar\" d=\"M{0} {1}V{2}M{3} {1}H{4}M{3} {2}H{4}\" "
            "stroke=\"#000000\" fill=\"none\"/>\n",
            fixed(cx), fixed(ya), fixed(yb), fixed(cx - 3), fixed(cx + 3));
      }
    }
  }

  // Legend.
  const double lx = left + pw + 20;
  for (std::size_t ii = 0; ii < inputs.size(); ++ii) {
    const double ly = top + 18.0 * static_cast<double>(ii);
    svg += fmt::format(
        "<rect class=\"legend\" x=\"{}\" y=\"{}\" width=\"12\" height=\"12\" "
        "fill=\"{}\"/>\n",
        fixed(lx), fixed(ly), kPalette[ii % std::size(kPalette)]);
    svg += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", fixed(lx + 18),
                       fixed(ly + 10), xml_escape(inputs[ii]));
  }
  svg += "</svg>\n";
  return svg;
}

std::string latex_escape(std::string_view s) {
  std::string out;
  for (const char c : s) {
    switch (c) {
      case '\\':
        out += "\\textbackslash{}";
        break;
      case '{':
      case '}':
      case '$':
      case '&':
      case '#':
      case '_':
      case '%':
        out += '\\';
        out += c;
        break;
      case '^':
        out += "\\textasciicircum{}";
        break;
      case '~':
        out += "\\textasciitilde{}";
        break;
      default:
        out += c;
    }
  }
  return out;
}

std::string render_report(const ReportSpec& spec,
                          const std::filesystem::path& base_dir) {
  for (const auto& f : spec.figures) {
    if (!std::filesystem::exists(base_dir / f.path)) {
      throw ResultsError(fmt::format("figure file {} is missing", f.path));
    }
  }
  std::string tex;
  tex += "\\documentclass{article}\n";
  tex += "\\usepackage[margin=2cm]{geometry}\n";
  tex += "\\usepackage{booktabs}\n";
  tex += "\\usepackage{svg}\n";
  tex += "% SVG figures are converted by the svg package, which calls Inkscape;\n";
  tex += "% compile with -shell-escape.\n";
  tex += fmt::format("\\title{{{}}}\n", latex_escape(spec.title));
  tex += "\\date{}\n";
  tex += "\\begin{document}\n\\maketitle\n\n";

  tex += "\\section*{Run}\n\\begin{tabular}{ll}\n\\toprule\n";
  for (const auto& [k, v] : spec.metadata) {
    tex += fmt::format("{} & \\texttt{{{}}} \\\\\n", latex_escape(k), latex_escape(v));
  }
  tex += "\\bottomrule\n\\end{tabular}\n\n";

  std::vector<std::string> metrics;
  for (const auto& s : spec.stats) {
    if (std::find(metrics.begin(), metrics.end(), s.metric) == metrics.end()) {
      metrics.push_back(s.metric);
    }
  }
  tex += "\\section*{Statistics}\n";
  for (const auto& metric : metrics) {
    bool single = false;
    std::string unit;
    std::string body;
    for (const auto& s : spec.stats) {
      if (s.metric != metric) continue;
      unit = s.unit;
      const bool one = s.count == 1;
      single = single || one;
      body += fmt::format("{} & {} & {}{} & {} & {} & {} & {} & {} & {} \\\\\n",
                          latex_escape(s.condition), latex_escape(s.input), s.count,
                          one ? "$^\\dagger$" : "", fixed(s.mean, 3),
                          fixed(s.stddev, 3), fixed(s.ci_half_width, 3),
                          fixed(s.min, 3), fixed(s.max, 3), s.failed_replications);
    }
    tex += "\\begin{table}[htbp]\n\\centering\n";
    tex += fmt::format("\\caption{{{} ({})}}\n", latex_escape(metric), latex_escape(unit));
    tex += "\\begin{tabular}{llrrrrrrr}\n\\toprule\n";
    tex += "condition & input & $n$ & mean & std & CI$_{95}$ & min & max & failed \\\\\n";
    tex += "\\midrule\n" + body + "\\bottomrule\n\\end{tabular}\n";
    if (single) {
      tex += "\n\\smallskip\\footnotesize $^\\dagger$ single replication; the "
             "confidence half-width is reported as 0.\n";
    }
    tex += "\\end{table}\n\n";
  }

  if (!spec.failures.empty()) {
    tex += "\\section*{Failed replications}\n\\begin{tabular}{lllrl}\n\\toprule\n";
    tex += "metric & condition & input & count & reasons \\\\\n\\midrule\n";
    for (const auto& f : spec.failures) {
      std::string reasons;
      for (std::size_t i = 0; i < f.reasons.size() && i < 3; ++i) {
        if (i > 0) reasons += "; ";
        reasons += f.reasons[i];
      }
      if (f.reasons.size() > 3) reasons += fmt::format("; +{} more", f.reasons.size() - 3);
      tex += fmt::format("{} & {} & {} & {} & {} \\\\\n",
                         latex_escape(f.metric.empty() ? "(all)" : f.metric),
                         latex_escape(f.condition), latex_escape(f.input),
                         f.replications, latex_escape(reasons));
    }
    tex += "\\bottomrule\n\\end{tabular}\n\n";
  }

  if (!spec.figures.empty()) tex += "\\section*{Figures}\n";
  for (const auto& f : spec.figures) {
    std::string path = f.path;
    if (path.ends_with(".svg")) path.resize(path.size() - 4);
    tex += "\\begin{figure}[htbp]\n\\centering\n";
    tex += fmt::format("\\includesvg[width=\\linewidth]{{{}}}\n", path);
    tex += fmt::format("\\caption{{{}}}\n", latex_escape(f.caption));
    tex += "\\end{figure}\n\n";
  }
  tex += "\\vfill\\footnotesize Statistics are computed across replications. "
         "CI$_{95}$ is the half-width $t_{0.975,n-1}\\,s/\\sqrt{n}$; minimum, "
         "maximum and the confidence interval are reported in addition to the "
         "mean.\n";
  tex += "\\end{document}\n";
  return tex;
}

std::optional<std::string> compile_pdf(const std::filesystem::path& dir,
                                       std::string_view tex_name) {
  if (!on_path("pdflatex")) {
    return std::string("pdflatex not found on PATH; wrote report.tex only");
  }
  const std::string cmd = fmt::format(
      "cd {} && pdflatex -interaction=nonstopmode -halt-on-error -shell-escape {}",
      shell_quote(dir.string()), shell_quote(tex_name));
  const CommandResult r = run_command(cmd, std::chrono::minutes(2));
  if (!r.ok()) {
    std::string tail = r.out.size() > 400 ? r.out.substr(r.out.size() - 400) : r.out;
    return fmt::format("pdflatex failed (exit {}): {}", r.exit_code, tail);
  }
  return std::nullopt;
}

std::string results_csv(std::span<const MetricSample> samples) {
  std::vector<MetricSample> rows(samples.begin(), samples.end());
  std::sort(rows.begin(), rows.end());
  std::string out = "metric,condition,input,replication,node,value,unit\n";
  for (const auto& s : rows) {
    out += fmt::format("{},{},{},{},{},{},{}\n", csv_field(s.metric),
                       csv_field(s.condition), csv_field(s.input), s.replication,
                       csv_field(s.node), shortest(s.value), csv_field(s.unit));
  }
  return out;
}

std::vector<MetricSample> parse_results_csv(std::string_view text) {
  const auto records = parse_csv_records(text);
  if (records.empty()) throw ResultsError("results.csv has no header");
  const std::vector<std::string> header = {"metric", "condition", "input",
                                           "replication", "node", "value", "unit"};
  if (records.front() != header) throw ResultsError("unexpected results.csv header");
  std::vector<MetricSample> out;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.size() != header.size()) {
      throw ResultsError(fmt::format("results.csv row {} has {} fields", i + 1, r.size()));
    }
    MetricSample s;
    s.metric = r[0];
    s.condition = r[1];
    s.input = r[2];
    s.node = r[4];
    s.unit = r[6];
    const auto parse_num = [&](const std::string& f, auto& v) {
      const auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || p != f.data() + f.size()) {
        throw ResultsError(fmt::format("results.csv row {}: bad number '{}'", i + 1, f));
      }
    };
    parse_num(r[3], s.replication);
    parse_num(r[5], s.value);
    out.push_back(std::move(s));
  }
  return out;
}

std::string metrics_json(std::span<const SummaryStats> stats,
                         std::span<const FailureGroup> failures,
                         const std::map<std::string, std::string>& metadata) {
  nlohmann::ordered_json j;
  j["metadata"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : metadata) j["metadata"][k] = v;
  j["groups"] = nlohmann::ordered_json::array();
  for (const auto& s : stats) {
    j["groups"].push_back({{"metric", s.metric},
                           {"condition", s.condition},
                           {"input", s.input},
                           {"unit", s.unit},
                           {"count", s.count},
                           {"mean", s.mean},
                           {"std", s.stddev},
                           {"ci95_half_width", s.ci_half_width},
                           {"min", s.min},
                           {"max", s.max},
                           {"failed_replications", s.failed_replications}});
  }
  j["failures"] = nlohmann::ordered_json::array();
  for (const auto& f : failures) {
    j["failures"].push_back({{"metric", f.metric},
                             {"condition", f.condition},
                             {"input", f.input},
                             {"replications", f.replications},
                             {"reasons", f.reasons}});
  }
  return j.dump(2) + "\n";
}

std::string failures_json(std::span<const SampleFailure> failures) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& f : failures) {
    j.push_back({{"metric", f.metric},
                 {"condition", f.condition},
                 {"input", f.input},
                 {"replication", f.replication},
                 {"reason", f.reason}});
  }
  return j.dump(2) + "\n";
}

std::vector<SampleFailure> parse_failures_json(std::string_view text) {
  std::vector<SampleFailure> out;
  try {
    for (const auto& f : nlohmann::json::parse(text)) {
      out.push_back({f.at("metric").get<std::string>(),
                     f.at("condition").get<std::string>(),
                     f.at("input").get<std::string>(),
                     f.at("replication").get<std::int64_t>(),
                     f.at("reason").get<std::string>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ResultsError(fmt::format("failures.json: {}", e.what()));
  }
  return out;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ResultsError(fmt::format("cannot write {}", tmp.string()));
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw ResultsError(fmt::format("cannot write {}", tmp.string()));
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ResultsError(fmt::format("cannot read {}", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace edgebench
