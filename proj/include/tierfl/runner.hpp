/*
 * Copyright 2026 The tierfl Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef TIERFL_RUNNER_HPP_
#define TIERFL_RUNNER_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tierfl/config.hpp"
#include "tierfl/protocol.hpp"

namespace tierfl {

// Shortest decimal form that parses back to the same double.
std::string FormatNumber(double value);

// Columns: round,loss,train_loss,macro_f1,silhouette,iou,dice,round_bytes,
// skipped_clients. Metrics that do not apply are left empty.
std::string MetricsCsv(std::span<const RoundMetrics> metrics);
std::vector<RoundMetrics> ParseMetricsCsv(std::string_view csv);
// Columns: label,e0,e1,...
std::string EmbeddingsCsv(const Embeddings& embeddings);
std::string SummaryJson(const RunConfig& config, const ExperimentResult& result);

struct RunArtifacts {
  std::string metrics_csv;
  std::string ledger_csv;
  std::string summary_json;
  std::string embeddings_csv;
};
RunArtifacts RenderArtifacts(const RunConfig& config, const ExperimentResult& result);

// Environment variable that relocates relative output directories.
inline constexpr const char* kOutputRootEnv = "TIERFL_OUTPUT_ROOT";
std::filesystem::path ResolveOutputDir(const std::string& dir);
// Writes metrics.csv, ledger.csv, summary.json and embeddings.csv. IoError
// names the failing path.
void WriteArtifacts(const std::filesystem::path& dir, const RunArtifacts& artifacts);

struct RunReport {
  std::filesystem::path dir;
  ExperimentResult result;
};
RunReport RunToDisk(const RunConfig& config);

enum class SweepAxis { kMargin, kSchedule, kComponent };

struct SweepPoint {
  std::string label;
  std::string value;
  RunConfig config;
};

struct SweepSpec {
  SweepAxis axis = SweepAxis::kMargin;
  std::vector<SweepPoint> points;
  std::string output_dir;
};

// {"base": <config object or path>, "axis": "margin" | "schedule" |
//  "component", "values": [...], "output": {"dir": ...}}. Schedule values are
// [t1, t2] pairs labelled A, B, C, ... in order. Component values are full,
// no_contrastive, no_role_split and neither.
SweepSpec ParseSweep(std::string_view text, const std::string& base_dir = ".");
SweepSpec LoadSweep(const std::string& path);

struct SweepRow {
  std::string label;
  std::string value;
  std::string strategy;
  std::size_t cut1 = 0;
  std::size_t cut2 = 0;
  bool ok = false;
  std::string error;
  RoundMetrics final;
  std::uint64_t total_bytes = 0;
};

// Runs every point from the shared base seed. A failing point yields a row
// with ok == false; the remaining points still run. With `write_points` each
// point's artifacts go to <output_dir>/<label>.
std::vector<SweepRow> RunSweep(const SweepSpec& spec, bool write_points);
std::string SweepCsv(std::span<const SweepRow> rows);

// Analytic cost report for a JSON cost-model input. Unit sizes come either
// from "units" (bytes) or are inverted from "observed_gb" per category.
std::string CostReport(std::string_view input_json);

}  // namespace tierfl

#endif  // TIERFL_RUNNER_HPP_
