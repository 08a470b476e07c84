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

#include "tierfl/runner.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <system_error>

#include "json.hpp"
#include "json_section.hpp"
#include "tierfl/error.hpp"
#include "tierfl/ledger.hpp"

namespace tierfl {

using internal::Json;
using internal::Section;

std::string FormatNumber(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw ContractError("format: cannot print number");
  return std::string(buf, end);
}

namespace {

std::string Optional(const std::optional<double>& v) {
  return v ? FormatNumber(*v) : std::string();
}

std::vector<std::string_view> SplitLine(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

double ParseDouble(std::string_view cell) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw ContractError("metrics csv: bad number \"" + std::string(cell) + "\"");
  }
  return v;
}

template <typename T>
T ParseInteger(std::string_view cell) {
  T v{};
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw ContractError("metrics csv: bad integer \"" + std::string(cell) + "\"");
  }
  return v;
}

std::optional<double> ParseOptional(std::string_view cell) {
  if (cell.empty()) return std::nullopt;
  return ParseDouble(cell);
}

std::string CsvQuote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

Json MetricsJson(const RoundMetrics& m) {
  Json j;
  j["round"] = m.round;
  j["loss"] = m.loss;
  j["train_loss"] = m.train_loss ? Json(*m.train_loss) : Json(nullptr);
  j["macro_f1"] = m.macro_f1;
  j["silhouette"] = m.silhouette ? Json(*m.silhouette) : Json(nullptr);
  j["iou"] = m.iou ? Json(*m.iou) : Json(nullptr);
  j["dice"] = m.dice ? Json(*m.dice) : Json(nullptr);
  return j;
}

void WriteFile(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out << text;
  out.close();
  if (!out) throw IoError(path.string(), "write failed");
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

std::string MetricsCsv(std::span<const RoundMetrics> metrics) {
  std::string out =
      "round,loss,train_loss,macro_f1,silhouette,iou,dice,round_bytes,skipped_clients\n";
  for (const RoundMetrics& m : metrics) {
    out += std::to_string(m.round) + "," + FormatNumber(m.loss) + "," + Optional(m.train_loss) +
           "," + FormatNumber(m.macro_f1) + "," + Optional(m.silhouette) + "," +
           Optional(m.iou) + "," + Optional(m.dice) + "," + std::to_string(m.round_bytes) +
           "," + std::to_string(m.skipped_clients) + "\n";
  }
  return out;
}

std::vector<RoundMetrics> ParseMetricsCsv(std::string_view csv) {
  std::vector<RoundMetrics> out;
  std::size_t pos = csv.find('\n');
  if (pos == std::string_view::npos) return out;
  ++pos;
  while (pos < csv.size()) {
    std::size_t end = csv.find('\n', pos);
    if (end == std::string_view::npos) end = csv.size();
    const auto cells = SplitLine(csv.substr(pos, end - pos));
    pos = end + 1;
    if (cells.size() != 9) throw ContractError("metrics csv: expected 9 columns");
    RoundMetrics m;
    m.round = ParseInteger<int>(cells[0]);
    m.loss = ParseDouble(cells[1]);
    m.train_loss = ParseOptional(cells[2]);
    m.macro_f1 = ParseDouble(cells[3]);
    m.silhouette = ParseOptional(cells[4]);
    m.iou = ParseOptional(cells[5]);
    m.dice = ParseOptional(cells[6]);
    m.round_bytes = ParseInteger<std::uint64_t>(cells[7]);
    m.skipped_clients = ParseInteger<std::size_t>(cells[8]);
    out.push_back(m);
  }
  return out;
}

std::string EmbeddingsCsv(const Embeddings& e) {
  std::string out = "label";
  for (std::size_t d = 0; d < e.dim; ++d) out += ",e" + std::to_string(d);
  out += "\n";
  for (std::size_t r = 0; r < e.labels.size(); ++r) {
    out += std::to_string(e.labels[r]);
    for (std::size_t d = 0; d < e.dim; ++d) out += "," + FormatNumber(e.values[r * e.dim + d]);
    out += "\n";
  }
  return out;
}

std::string SummaryJson(const RunConfig& config, const ExperimentResult& result) {
  Json j;
  j["strategy"] = StrategyName(config.strategy.kind);
  j["seed"] = config.seed;
  j["rounds"] = result.metrics.size();
  j["final"] = result.metrics.empty() ? Json(nullptr) : MetricsJson(result.metrics.back());
  const LedgerSummary summary = result.ledger.Summary();
  Json ledger, counts;
  for (MessageKind k : kAllMessageKinds) {
    ledger[MessageKindName(k)] = result.ledger.kind_bytes(k);
    counts[MessageKindName(k)] = result.ledger.count(k);
  }
  ledger["total"] = result.ledger.total_bytes();
  j["ledger_bytes"] = ledger;
  j["ledger_messages"] = counts;
  j["ledger_total_gb"] = summary.Total() / kBytesPerGB;
  j["config"] = Json::parse(ConfigToJson(config));
  return j.dump(2) + "\n";
}

RunArtifacts RenderArtifacts(const RunConfig& config, const ExperimentResult& result) {
  return RunArtifacts{MetricsCsv(result.metrics), result.ledger.ToCsv(),
                      SummaryJson(config, result), EmbeddingsCsv(result.embeddings)};
}

std::filesystem::path ResolveOutputDir(const std::string& dir) {
  const std::filesystem::path p(dir);
  const char* root = std::getenv(kOutputRootEnv);
  if (p.is_relative() && root != nullptr && *root != '\0') {
    return std::filesystem::path(root) / p;
  }
  return p;
}

void WriteArtifacts(const std::filesystem::path& dir, const RunArtifacts& a) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError(dir.string(), "cannot create directory: " + ec.message());
  WriteFile(dir / "metrics.csv", a.metrics_csv);
  WriteFile(dir / "ledger.csv", a.ledger_csv);
  WriteFile(dir / "summary.json", a.summary_json);
  WriteFile(dir / "embeddings.csv", a.embeddings_csv);
}

RunReport RunToDisk(const RunConfig& config) {
  RunReport report{ResolveOutputDir(config.output_dir), RunExperiment(BuildExperiment(config))};
  WriteArtifacts(report.dir, RenderArtifacts(config, report.result));
  return report;
}

// ---------------------------------------------------------------------------

namespace {

const char* const kComponents[] = {"full", "no_contrastive", "no_role_split", "neither"};

void ApplyComponent(RunConfig& c, std::string_view component) {
  const bool contrastive = component == "full" || component == "no_role_split";
  const bool role_split = component == "full" || component == "no_contrastive";
  c.strategy.kind = contrastive ? StrategyKind::kSherl : StrategyKind::kHsfl;
  if (!role_split) {
    // Capability cut: one layer on the client, the head alone on the cloud.
    c.model.cut1 = 1;
    c.model.cut2 = LayerCount(c.model) - 1;
  }
}

std::string ScheduleLabel(std::size_t index) {
  std::string label;
  std::size_t n = index;
  do {
    label.insert(label.begin(), static_cast<char>('A' + n % 26));
    n /= 26;
  } while (n-- > 0);
  return label;
}

}  // namespace

SweepSpec ParseSweep(std::string_view text, const std::string& base_dir) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
  std::vector<FieldIssue> issues;
  Section root(&doc, "", issues);
  RunConfig base;
  bool have_base = false;
  if (const Json* b = root.Raw("base")) {
    try {
      if (b->is_string()) {
        std::filesystem::path p(b->get<std::string>());
        if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
        base = LoadConfig(p.string());
        have_base = true;
      } else if (b->is_object()) {
        base = ParseConfig(b->dump(), base_dir);
        have_base = true;
      } else {
        root.Issue("base", "must be a config object or a path");
      }
    } catch (const ConfigError& e) {
      for (const FieldIssue& i : e.issues()) {
        issues.push_back({i.field.empty() ? "base" : "base." + i.field, i.message});
      }
    } catch (const IoError& e) {
      root.Issue("base", e.what());
    }
  } else {
    root.Issue("base", "required");
  }
  SweepSpec spec;
  std::string axis;
  root.Read("axis", axis);
  if (axis == "margin") {
    spec.axis = SweepAxis::kMargin;
  } else if (axis == "schedule") {
    spec.axis = SweepAxis::kSchedule;
  } else if (axis == "component") {
    spec.axis = SweepAxis::kComponent;
  } else {
    root.Issue("axis", "must be one of margin, schedule, component");
  }
  Section out = root.Child("output");
  out.Read("dir", spec.output_dir);
  out.Finish();
  const Json* values = root.Raw("values");
  if (values == nullptr || !values->is_array() || values->empty()) {
    root.Issue("values", "must be a nonempty array");
    values = nullptr;
  }
  root.Finish();
  if (values != nullptr && have_base && issues.empty()) {
    for (std::size_t i = 0; i < values->size(); ++i) {
      const Json& v = (*values)[i];
      const std::string field = "values[" + std::to_string(i) + "]";
      SweepPoint point{"", "", base};
      if (spec.axis == SweepAxis::kMargin) {
        if (!v.is_number()) {
          issues.push_back({field, "must be a number"});
          continue;
        }
        point.config.strategy.margin = v.get<double>();
        point.value = FormatNumber(point.config.strategy.margin);
        point.label = "m" + point.value;
      } else if (spec.axis == SweepAxis::kSchedule) {
        if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() ||
            !v[1].is_number_integer()) {
          issues.push_back({field, "must be a [t1, t2] pair of integers"});
          continue;
        }
        point.config.schedule.t1 = v[0].get<int>();
        point.config.schedule.t2 = v[1].get<int>();
        point.label = ScheduleLabel(i);
        point.value = std::to_string(point.config.schedule.t1) + "/" +
                      std::to_string(point.config.schedule.t2);
      } else {
        const std::string name = v.is_string() ? v.get<std::string>() : "";
        bool known = false;
        for (const char* c : kComponents) known = known || name == c;
        if (!known) {
          issues.push_back({field, "must be one of full, no_contrastive, no_role_split, neither"});
          continue;
        }
        ApplyComponent(point.config, name);
        point.label = name;
        point.value = name;
      }
      spec.points.push_back(std::move(point));
    }
  }
  if (!issues.empty()) throw ConfigError(std::move(issues));
  if (spec.output_dir.empty()) spec.output_dir = base.output_dir + "_sweep";
  return spec;
}

SweepSpec LoadSweep(const std::string& path) {
  const auto dir = std::filesystem::path(path).parent_path().string();
  return ParseSweep(ReadFile(path), dir.empty() ? "." : dir);
}

std::vector<SweepRow> RunSweep(const SweepSpec& spec, bool write_points) {
  std::vector<SweepRow> rows;
  const std::filesystem::path root = ResolveOutputDir(spec.output_dir);
  for (const SweepPoint& point : spec.points) {
    SweepRow row;
    row.label = point.label;
    row.value = point.value;
    row.strategy = StrategyName(point.config.strategy.kind);
    row.cut1 = point.config.model.cut1;
    row.cut2 = point.config.model.cut2;
    try {
      // Re-validate: axis values may put a point out of range.
      RunConfig config = ParseConfig(ConfigToJson(point.config));
      config.output_dir = (root / point.label).string();
      ExperimentResult result = RunExperiment(BuildExperiment(config));
      if (write_points) WriteArtifacts(config.output_dir, RenderArtifacts(config, result));
      if (!result.metrics.empty()) row.final = result.metrics.back();
      row.total_bytes = result.ledger.total_bytes();
      row.ok = true;
    } catch (const Error& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string SweepCsv(std::span<const SweepRow> rows) {
  std::string out =
      "label,value,strategy,cut1,cut2,status,round,loss,macro_f1,silhouette,iou,dice,"
      "total_bytes,error\n";
  for (const SweepRow& r : rows) {
    out += CsvQuote(r.label) + "," + CsvQuote(r.value) + "," + r.strategy + "," +
           std::to_string(r.cut1) + "," + std::to_string(r.cut2) + "," +
           (r.ok ? "ok" : "error") + ",";
    if (r.ok) {
      out += std::to_string(r.final.round) + "," + FormatNumber(r.final.loss) + "," +
             FormatNumber(r.final.macro_f1) + "," + Optional(r.final.silhouette) + "," +
             Optional(r.final.iou) + "," + Optional(r.final.dice) + "," +
             std::to_string(r.total_bytes) + ",";
    } else {
      out += ",,,,,,,";
    }
    out += CsvQuote(r.error) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string CostReport(std::string_view input_json) {
  Json doc;
  try {
    doc = Json::parse(input_json);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
  std::vector<FieldIssue> issues;
  Section root(&doc, "", issues);
  CostModelInput in;
  root.ReadEnum("strategy", in.strategy, ParseStrategy,
                "fedavg, fedsgd, fedprox, fednova, splitfed, hierfl, hsfl, sherl");
  root.Read("n_clients", in.n_clients);
  root.Read("n_edges", in.n_edges);
  root.Read("rounds", in.rounds);
  root.Read("sample_rate", in.sample_rate);
  root.Read("t1", in.t1);
  root.Read("t2", in.t2);
  root.Read("global_client_sync", in.global_client_sync);
  const bool has_units = doc.is_object() && doc.contains("units");
  const bool has_observed = doc.is_object() && doc.contains("observed_gb");
  {
    Section u = root.Child("units");
    u.Read("client_model", in.client_model);
    u.Read("edge_model", in.edge_model);
    u.Read("smashed_per_client_round", in.smashed_per_client_round);
    u.Read("edge_smashed_per_edge_round", in.edge_smashed_per_edge_round);
    u.Read("grad_per_client_round", in.grad_per_client_round);
    u.Read("cloud_grad_per_edge_round", in.cloud_grad_per_edge_round);
    if (doc.is_object() && doc.contains("units") && doc["units"].is_object()) {
      if (doc["units"].contains("client_model_down")) {
        double v = 0;
        u.Read("client_model_down", v);
        in.client_model_down = v;
      }
      if (doc["units"].contains("edge_model_down")) {
        double v = 0;
        u.Read("edge_model_down", v);
        in.edge_model_down = v;
      }
    }
    u.Finish();
  }
  LedgerSummary observed;
  {
    Section o = root.Child("observed_gb");
    for (MessageKind k : kAllMessageKinds) {
      double gb = 0.0;
      o.Read(MessageKindName(k), gb);
      observed[k] = gb * kBytesPerGB;
    }
    o.Finish();
  }
  root.Finish();
  if (has_units && has_observed) root.Issue("units", "give either units or observed_gb");
  if (in.n_clients < 1) root.Issue("n_clients", "must be >= 1");
  if (in.n_edges < 1) root.Issue("n_edges", "must be >= 1");
  if (in.rounds < 0) root.Issue("rounds", "must be >= 0");
  if (in.t1 < 1) root.Issue("t1", "must be >= 1");
  if (in.t2 < 1) root.Issue("t2", "must be >= 1");
  if (!(in.sample_rate > 0.0 && in.sample_rate <= 1.0)) {
    root.Issue("sample_rate", "must be in (0,1]");
  }
  for (double v : {in.client_model, in.edge_model, in.smashed_per_client_round,
                   in.edge_smashed_per_edge_round, in.grad_per_client_round,
                   in.cloud_grad_per_edge_round}) {
    if (v < 0.0) {
      root.Issue("units", "unit sizes must be non-negative");
      break;
    }
  }
  if (!issues.empty()) throw ConfigError(std::move(issues));
  if (has_observed) in = InvertUnitSizes(in, observed);

  const LedgerSummary mult = Multiplicities(in);
  const LedgerSummary cost = AnalyticCost(in);
  Json j;
  j["strategy"] = StrategyName(in.strategy);
  j["n_clients"] = in.n_clients;
  j["n_edges"] = in.n_edges;
  j["rounds"] = in.rounds;
  j["sample_rate"] = in.sample_rate;
  j["t1"] = in.t1;
  j["t2"] = in.t2;
  j["global_client_sync"] = in.global_client_sync;
  j["units"] = {{"client_model", in.client_model},
                {"edge_model", in.edge_model},
                {"smashed_per_client_round", in.smashed_per_client_round},
                {"edge_smashed_per_edge_round", in.edge_smashed_per_edge_round},
                {"grad_per_client_round", in.grad_per_client_round},
                {"cloud_grad_per_edge_round", in.cloud_grad_per_edge_round},
                {"client_model_down", in.client_model_down.value_or(in.client_model)},
                {"edge_model_down", in.edge_model_down.value_or(in.edge_model)}};
  Json messages, bytes, gb;
  for (MessageKind k : kAllMessageKinds) {
    messages[MessageKindName(k)] = mult[k];
    bytes[MessageKindName(k)] = cost[k];
    gb[MessageKindName(k)] = cost[k] / kBytesPerGB;
  }
  j["messages"] = messages;
  j["bytes"] = bytes;
  j["gb"] = gb;
  j["total_bytes"] = cost.Total();
  j["total_gb"] = cost.Total() / kBytesPerGB;
  return j.dump(2) + "\n";
}

}  // namespace tierfl
