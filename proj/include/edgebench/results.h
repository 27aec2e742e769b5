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

// Post-processing: per-group statistics, SVG bar charts, the LaTeX report
// and the results.csv / metrics.json files. Every function here is a pure
// transformation of its inputs; nothing reads the clock.

#ifndef EDGEBENCH_RESULTS_H_
#define EDGEBENCH_RESULTS_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "edgebench/controllers.h"

namespace edgebench {

class ResultsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SummaryStats {
  std::string metric;
  std::string condition;
  std::string input;
  std::string unit;
  std::int64_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;         // sample standard deviation
  double ci_half_width = 0.0;  // 95%, t distribution; 0 when count == 1
  double min = 0.0;
  double max = 0.0;
  std::int64_t failed_replications = 0;

  friend bool operator==(const SummaryStats&, const SummaryStats&) = default;
};

// Per (metric, condition, input) group, in lexicographic group order.
// A failure with an empty metric counts against every metric of its cell;
// distinct replications are counted once. Throws ResultsError when a group
// mixes units.
std::vector<SummaryStats> aggregate(std::span<const MetricSample> samples,
                                    std::span<const SampleFailure> failures = {});

struct FailureGroup {
  std::string metric;  // empty: whole cell
  std::string condition;
  std::string input;
  std::int64_t replications = 0;
  std::vector<std::string> reasons;  // distinct, sorted

  friend bool operator==(const FailureGroup&, const FailureGroup&) = default;
};

std::vector<FailureGroup> failure_groups(std::span<const SampleFailure> failures);

// Two-sided 95% Student-t quantile t_{0.975, df}.
double t_quantile_975(std::int64_t df);

struct ChartLayout {
  int width = 960;
  int height = 540;
  std::string title;
};

// Grouped bar chart of one metric: groups are conditions, one bar per input
// inside each group, error bars +/- ci_half_width. Rows of other metrics are
// ignored. Throws ResultsError when no row matches.
std::string render_bar_chart(std::span<const SummaryStats> stats,
                             std::string_view metric,
                             const ChartLayout& layout = {});

// plots/<metric>-all.svg, relative to the run directory.
std::string chart_file_name(std::string_view metric);

struct FigureRef {
  std::string caption;
  std::string path;  // relative to the report directory
};

struct ReportSpec {
  std::string title;
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<FigureRef> figures;
  std::vector<SummaryStats> stats;
  std::vector<FailureGroup> failures;
};

// article-class LaTeX with a metadata table, one table per metric and one
// figure environment per chart (via the svg package). Throws ResultsError
// when a figure file is missing under `base_dir`.
std::string render_report(const ReportSpec& spec,
                          const std::filesystem::path& base_dir);

std::string latex_escape(std::string_view s);

// Compiles report.tex in `dir` when pdflatex is on PATH. Returns a warning
// when no PDF was produced; report.tex is never removed.
std::optional<std::string> compile_pdf(const std::filesystem::path& dir,
                                       std::string_view tex_name = "report.tex");

// metric,condition,input,replication,node,value,unit with sorted rows and
// RFC 4180 quoting. Values use the shortest round-trip representation.
std::string results_csv(std::span<const MetricSample> samples);
std::vector<MetricSample> parse_results_csv(std::string_view text);

// Statistics, failure groups and metadata as a JSON document.
std::string metrics_json(std::span<const SummaryStats> stats,
                         std::span<const FailureGroup> failures,
                         const std::map<std::string, std::string>& metadata);

// failures.json: the raw failure list, for re-rendering reports.
std::string failures_json(std::span<const SampleFailure> failures);
std::vector<SampleFailure> parse_failures_json(std::string_view text);

// Writes `content` to `path` through a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

}  // namespace edgebench

#endif  // EDGEBENCH_RESULTS_H_
