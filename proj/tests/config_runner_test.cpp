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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "json.hpp"
#include "tierfl/config.hpp"
#include "tierfl/error.hpp"
#include "tierfl/runner.hpp"

namespace tierfl {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const char* kTinyConfig = R"({
  "seed": 9,
  "strategy": {"kind": "sherl", "batch_size": 8},
  "topology": {"n_clients": 4, "n_edges": 2},
  "schedule": {"rounds": 3, "t1": 1, "t2": 2, "sample_rate": 1.0},
  "model": {"hidden": [8, 8, 6, 6]},
  "data": {"classes": 3, "dim": 5, "train_per_class": 8, "test_per_class": 4,
           "partition": "iid"},
  "output": {"dir": "tiny"}
})";

std::vector<FieldIssue> IssuesOf(const std::string& text) {
  try {
    ParseConfig(text);
  } catch (const ConfigError& e) {
    return e.issues();
  }
  return {};
}

bool HasIssue(const std::vector<FieldIssue>& issues, const std::string& field,
              const std::string& fragment = "") {
  for (const FieldIssue& i : issues) {
    if (i.field == field && i.message.find(fragment) != std::string::npos) return true;
  }
  return false;
}

TEST(Config, Defaults) {
  const RunConfig c = ParseConfig("{}");
  EXPECT_EQ(c.strategy.kind, StrategyKind::kSherl);
  EXPECT_EQ(c.strategy.margin, 0.5);
  EXPECT_EQ(c.schedule.sample_rate, 0.1);
  EXPECT_EQ(c.schedule.t1, 5);
  EXPECT_EQ(c.schedule.t2, 10);
  EXPECT_EQ(c.strategy.optimizer.kind, OptimizerKind::kAdam);
  EXPECT_EQ(c.strategy.optimizer.lr, 1e-4);
  EXPECT_EQ(c.n_clients, 200u);
  EXPECT_EQ(c.n_edges, 10u);
  EXPECT_EQ(c.strategy.pairing, EdgePairing::kEdge);
  EXPECT_EQ(ParseConfig(R"({"strategy": {"pairing": "client"}})").strategy.pairing,
            EdgePairing::kClient);
  EXPECT_TRUE(HasIssue(IssuesOf(R"({"strategy": {"pairing": "cloud"}})"), "strategy.pairing"));
}

TEST(Config, MarginOutOfRangeNamesTheRange) {
  const auto issues = IssuesOf(R"({"strategy": {"margin": 3.0}})");
  ASSERT_EQ(issues.size(), 1u);
  EXPECT_EQ(issues[0].field, "strategy.margin");
  EXPECT_NE(issues[0].message.find("[0,2]"), std::string::npos);
  EXPECT_TRUE(IssuesOf(R"({"strategy": {"margin": 2.0}})").empty());
  EXPECT_TRUE(IssuesOf(R"({"strategy": {"margin": 0}})").empty());
  EXPECT_TRUE(HasIssue(IssuesOf(R"({"strategy": {"margin": -0.1}})"), "strategy.margin"));
}

TEST(Config, ReportsEveryProblemAtOnce) {
  const auto issues = IssuesOf(R"({
    "strategy": {"kind": "fedsomething", "margin": 5, "colour": 1},
    "schedule": {"t1": 0, "sample_rate": 1.5},
    "model": {"cut1": 4, "cut2": 2},
    "bogus": true
  })");
  EXPECT_TRUE(HasIssue(issues, "strategy.kind", "sherl"));
  EXPECT_TRUE(HasIssue(issues, "strategy.margin"));
  EXPECT_TRUE(HasIssue(issues, "strategy.colour"));
  EXPECT_TRUE(HasIssue(issues, "schedule.t1", "got 0"));
  EXPECT_TRUE(HasIssue(issues, "schedule.sample_rate"));
  EXPECT_TRUE(HasIssue(issues, "model.cut1"));
  EXPECT_TRUE(HasIssue(issues, "bogus"));
}

TEST(Config, TypeMismatchesAndMalformedJson) {
  EXPECT_TRUE(HasIssue(IssuesOf(R"({"schedule": {"rounds": "ten"}})"), "schedule.rounds"));
  EXPECT_TRUE(HasIssue(IssuesOf(R"({"topology": {"n_clients": -3}})"), "topology.n_clients"));
  EXPECT_FALSE(IssuesOf("{ not json").empty());
  EXPECT_TRUE(HasIssue(IssuesOf(R"({"topology": {"n_clients": 3, "n_edges": 4}})"),
                       "topology.n_edges"));
}

TEST(Config, CanonicalJsonRoundTrip) {
  const RunConfig c = ParseConfig(kTinyConfig);
  const std::string once = ConfigToJson(c);
  EXPECT_EQ(ConfigToJson(ParseConfig(once)), once);
  EXPECT_EQ(ParseConfig(once).model.hidden, (std::vector<std::size_t>{8, 8, 6, 6}));
  EXPECT_EQ(LayerCount(c.model), 5u);
}

TEST(Config, CsvSourceResolvesAgainstConfigDirectory) {
  const fs::path dir = fs::temp_directory_path() / "tierfl_config_csv";
  fs::create_directories(dir);
  {
    std::ofstream train(dir / "train.csv");
    train << "a,b,label\n";
    for (int i = 0; i < 12; ++i) train << i * 0.1 << ',' << -i * 0.2 << ',' << i % 2 << '\n';
    std::ofstream test(dir / "test.csv");
    test << "a,b,label\n0.5,0.5,1\n0.1,0.2,0\n";
    std::ofstream cfg(dir / "run.json");
    cfg << R"({"topology": {"n_clients": 2, "n_edges": 1},
               "model": {"hidden": [4, 4, 3, 3]},
               "data": {"source": "csv", "train_csv": "train.csv",
                        "test_csv": "test.csv", "partition": "iid"}})";
  }
  const RunConfig c = LoadConfig((dir / "run.json").string());
  const Experiment e = BuildExperiment(c);
  EXPECT_EQ(e.train.size(), 12u);
  EXPECT_EQ(e.test.size(), 2u);
  EXPECT_EQ(e.train.dim, 2u);
  EXPECT_EQ(e.train.num_classes, 2);
  EXPECT_THROW(LoadConfig((dir / "missing.json").string()), IoError);
  fs::remove_all(dir);
}

TEST(Runner, FormatNumberRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5, 123456789.0}) {
    EXPECT_EQ(std::stod(FormatNumber(v)), v);
  }
  EXPECT_EQ(FormatNumber(0.5), "0.5");
}

TEST(Runner, MetricsCsvRoundTrip) {
  std::vector<RoundMetrics> m(2);
  m[0] = {1, 0.7, 0.9, 0.25, std::nullopt, std::nullopt, std::nullopt, 1234, 0};
  m[1] = {2, 1.0 / 3.0, std::nullopt, 0.5, 0.125, 0.3, 0.6, 99, 2};
  const std::string csv = MetricsCsv(m);
  const auto back = ParseMetricsCsv(csv);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].loss, 1.0 / 3.0);
  EXPECT_EQ(back[0].train_loss, 0.9);
  EXPECT_FALSE(back[1].train_loss.has_value());
  EXPECT_EQ(back[1].silhouette, 0.125);
  EXPECT_EQ(back[1].skipped_clients, 2u);
  EXPECT_EQ(MetricsCsv(back), csv);
}

TEST(Runner, ArtifactsAreDeterministicAndConsistent) {
  const RunConfig c = ParseConfig(kTinyConfig);
  const ExperimentResult a = RunExperiment(BuildExperiment(c));
  const ExperimentResult b = RunExperiment(BuildExperiment(c));
  const RunArtifacts ra = RenderArtifacts(c, a), rb = RenderArtifacts(c, b);
  EXPECT_EQ(ra.metrics_csv, rb.metrics_csv);
  EXPECT_EQ(ra.ledger_csv, rb.ledger_csv);
  EXPECT_EQ(ra.summary_json, rb.summary_json);

  const json summary = json::parse(ra.summary_json);
  EXPECT_EQ(summary["strategy"], "sherl");
  EXPECT_EQ(summary["ledger_bytes"]["grad_from_cloud"], 0);
  EXPECT_EQ(summary["ledger_bytes"]["total"], a.ledger.total_bytes());

  // One embedding row per test sample.
  std::istringstream rows(ra.embeddings_csv);
  std::string line;
  std::size_t count = 0;
  std::getline(rows, line);
  EXPECT_EQ(line.rfind("label,e0,", 0), 0u);
  while (std::getline(rows, line)) count += !line.empty();
  EXPECT_EQ(count, 12u);
}

class ScopedEnv {
 public:
  ScopedEnv(const char* name, const std::string& value) : name_(name) {
    setenv(name, value.c_str(), 1);
  }
  ~ScopedEnv() { unsetenv(name_); }

 private:
  const char* name_;
};

TEST(Runner, OutputRootRelocatesRelativeDirectories) {
  const fs::path root = fs::temp_directory_path() / "tierfl_output_root";
  fs::remove_all(root);
  ScopedEnv env(kOutputRootEnv, root.string());
  const RunReport report = RunToDisk(ParseConfig(kTinyConfig));
  EXPECT_EQ(report.dir, root / "tiny");
  for (const char* f : {"metrics.csv", "ledger.csv", "summary.json", "embeddings.csv"}) {
    EXPECT_TRUE(fs::exists(root / "tiny" / f)) << f;
  }
  EXPECT_EQ(ResolveOutputDir("/abs/path"), fs::path("/abs/path"));
  fs::remove_all(root);
}

TEST(Runner, UnwritableOutputNamesThePath) {
  const fs::path blocker = fs::temp_directory_path() / "tierfl_blocker_file";
  { std::ofstream(blocker) << "x"; }
  try {
    WriteArtifacts(blocker / "sub", RunArtifacts{});
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(e.path().find("tierfl_blocker_file"), std::string::npos);
  }
  fs::remove(blocker);
}

std::string SweepText(const std::string& axis, const std::string& values) {
  return std::string(R"({"base": )") + kTinyConfig + R"(, "axis": ")" + axis +
         R"(", "values": )" + values + "}";
}

TEST(Sweep, MarginRowsAreDeterministic) {
  const SweepSpec spec = ParseSweep(SweepText("margin", "[0.2, 0.5, 1.0, 1.5, 2.0]"));
  ASSERT_EQ(spec.points.size(), 5u);
  EXPECT_EQ(spec.points[0].label, "m0.2");
  EXPECT_EQ(spec.points[4].config.strategy.margin, 2.0);
  EXPECT_EQ(spec.output_dir, "tiny_sweep");
  const auto a = RunSweep(spec, false);
  const auto b = RunSweep(spec, false);
  ASSERT_EQ(a.size(), 5u);
  for (const SweepRow& r : a) EXPECT_TRUE(r.ok) << r.error;
  EXPECT_EQ(SweepCsv(a), SweepCsv(b));
}

TEST(Sweep, ScheduleLabelsAndPointFailures) {
  const SweepSpec spec = ParseSweep(SweepText("schedule", "[[1, 2], [2, 4], [0, 3]]"));
  ASSERT_EQ(spec.points.size(), 3u);
  EXPECT_EQ(spec.points[0].label, "A");
  EXPECT_EQ(spec.points[1].label, "B");
  EXPECT_EQ(spec.points[2].value, "0/3");
  const auto rows = RunSweep(spec, false);
  EXPECT_TRUE(rows[0].ok);
  EXPECT_TRUE(rows[1].ok);
  EXPECT_FALSE(rows[2].ok);
  EXPECT_NE(rows[2].error.find("schedule.t1"), std::string::npos);
  EXPECT_NE(SweepCsv(rows).find(",error,"), std::string::npos);
}

TEST(Sweep, ComponentAblations) {
  const SweepSpec spec =
      ParseSweep(SweepText("component", R"(["full", "no_contrastive", "no_role_split"])"));
  ASSERT_EQ(spec.points.size(), 3u);
  EXPECT_EQ(spec.points[0].config.strategy.kind, StrategyKind::kSherl);
  EXPECT_EQ(spec.points[1].config.strategy.kind, StrategyKind::kHsfl);
  EXPECT_EQ(spec.points[2].config.model.cut1, 1u);
  EXPECT_EQ(spec.points[2].config.model.cut2, 4u);
}

TEST(Sweep, RejectsBadSpecs) {
  EXPECT_THROW(ParseSweep(SweepText("margin", "[]")), ConfigError);
  EXPECT_THROW(ParseSweep(SweepText("learning_rate", "[1]")), ConfigError);
  EXPECT_THROW(ParseSweep(SweepText("component", R"(["half"])")), ConfigError);
  EXPECT_THROW(ParseSweep(R"({"axis": "margin", "values": [0.5]})"), ConfigError);
}

TEST(CostReport, UnitsAndObservedInversion) {
  const json report = json::parse(CostReport(R"({
    "strategy": "fedavg", "n_clients": 200, "n_edges": 10, "rounds": 200,
    "sample_rate": 0.1, "units": {"client_model": 1000}})"));
  EXPECT_EQ(report["total_bytes"].get<double>(), 200.0 * 220 * 1000);
  const json inverted = json::parse(CostReport(R"({
    "strategy": "sherl", "observed_gb": {"client_smashed_up": 4, "grad_from_edge": 2}})"));
  EXPECT_NEAR(inverted["total_gb"].get<double>(), 6.0, 1e-12);
  EXPECT_THROW(CostReport(R"({"strategy": "sherl", "units": {"wat": 1}})"), ConfigError);
}

}  // namespace
}  // namespace tierfl
