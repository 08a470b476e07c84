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

#include "tierfl/config.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <utility>

#include "json.hpp"
#include "json_section.hpp"
#include "tierfl/error.hpp"
#include "tierfl/rng.hpp"

namespace tierfl {

namespace {

using internal::Json;
using internal::Section;

std::optional<OptimizerKind> ParseOptimizer(std::string_view s) {
  if (s == "sgd") return OptimizerKind::kSgd;
  if (s == "adam") return OptimizerKind::kAdam;
  return std::nullopt;
}
const char* OptimizerName(OptimizerKind k) { return k == OptimizerKind::kSgd ? "sgd" : "adam"; }

std::optional<DataSource> ParseSource(std::string_view s) {
  if (s == "blobs") return DataSource::kBlobs;
  if (s == "csv") return DataSource::kCsv;
  return std::nullopt;
}
const char* SourceName(DataSource s) { return s == DataSource::kBlobs ? "blobs" : "csv"; }

std::optional<EdgePairing> ParsePairing(std::string_view s) {
  if (s == "client") return EdgePairing::kClient;
  if (s == "edge") return EdgePairing::kEdge;
  return std::nullopt;
}
const char* PairingName(EdgePairing p) { return p == EdgePairing::kClient ? "client" : "edge"; }

std::optional<PartitionMode> ParsePartition(std::string_view s) {
  if (s == "iid") return PartitionMode::kIid;
  if (s == "dirichlet") return PartitionMode::kDirichlet;
  if (s == "shards") return PartitionMode::kShards;
  return std::nullopt;
}
const char* PartitionName(PartitionMode m) {
  switch (m) {
    case PartitionMode::kIid:
      return "iid";
    case PartitionMode::kDirichlet:
      return "dirichlet";
    case PartitionMode::kShards:
      return "shards";
  }
  return "iid";
}

std::string ResolvePath(const std::string& path, const std::string& base_dir) {
  if (path.empty() || base_dir.empty() || base_dir == ".") return path;
  const std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  return (std::filesystem::path(base_dir) / p).lexically_normal().string();
}

void Validate(const RunConfig& c, std::vector<FieldIssue>& issues) {
  auto issue = [&](const char* field, const std::string& message) {
    issues.push_back({field, message});
  };
  const StrategyConfig& s = c.strategy;
  if (!(s.margin >= 0.0 && s.margin <= 2.0)) {
    issue("strategy.margin", "must be in [0,2], got " + Json(s.margin).dump());
  }
  if (!(s.mu >= 0.0)) issue("strategy.mu", "must be >= 0");
  if (s.local_epochs < 0) issue("strategy.local_epochs", "must be >= 0");
  if (s.batch_size < 1) issue("strategy.batch_size", "must be >= 1");
  if (!(s.pos_fraction >= 0.0 && s.pos_fraction <= 1.0)) {
    issue("strategy.pos_fraction", "must be in [0,1]");
  }
  if (s.cloud_epochs < 1) issue("strategy.cloud_epochs", "must be >= 1");
  if (!(s.optimizer.lr > 0.0)) issue("strategy.optimizer.lr", "must be > 0");
  if (!(s.optimizer.beta1 >= 0.0 && s.optimizer.beta1 < 1.0)) {
    issue("strategy.optimizer.beta1", "must be in [0,1)");
  }
  if (!(s.optimizer.beta2 >= 0.0 && s.optimizer.beta2 < 1.0)) {
    issue("strategy.optimizer.beta2", "must be in [0,1)");
  }
  if (!(s.optimizer.eps > 0.0)) issue("strategy.optimizer.eps", "must be > 0");

  if (c.n_clients < 1) issue("topology.n_clients", "must be >= 1");
  if (c.n_edges < 1) issue("topology.n_edges", "must be >= 1");
  if (c.n_edges > c.n_clients) issue("topology.n_edges", "must not exceed n_clients");

  const Schedule& sch = c.schedule;
  if (sch.rounds < 0) issue("schedule.rounds", "must be >= 0");
  if (sch.t1 < 1) issue("schedule.t1", "must be >= 1, got " + std::to_string(sch.t1));
  if (sch.t2 < 1) issue("schedule.t2", "must be >= 1, got " + std::to_string(sch.t2));
  if (!(sch.sample_rate > 0.0 && sch.sample_rate <= 1.0)) {
    issue("schedule.sample_rate", "must be in (0,1]");
  }

  const std::size_t layers = LayerCount(c.model);
  if (c.model.hidden.empty()) issue("model.hidden", "needs at least one hidden layer");
  if (!(0 < c.model.cut1 && c.model.cut1 < c.model.cut2 && c.model.cut2 < layers)) {
    issue("model.cut1", "need 0 < cut1 < cut2 < " + std::to_string(layers) +
                            " (layer count), got cut1=" + std::to_string(c.model.cut1) +
                            ", cut2=" + std::to_string(c.model.cut2));
  }
  if (c.model.bytes_per_scalar != 4 && c.model.bytes_per_scalar != 8) {
    issue("model.bytes_per_scalar", "must be 4 or 8");
  }

  const DataConfig& d = c.data;
  if (d.mask_grid > 1024) issue("data.mask_grid", "must be <= 1024");
  if (!(d.alpha > 0.0)) issue("data.alpha", "must be > 0");
  if (d.shards_per_client < 1) issue("data.shards_per_client", "must be >= 1");
  if (d.source == DataSource::kBlobs) {
    if (d.classes < 2) issue("data.classes", "must be >= 2");
    if (d.dim < 1) issue("data.dim", "must be >= 1");
    if (d.train_per_class < 1) issue("data.train_per_class", "must be >= 1");
    if (d.test_per_class < 1) issue("data.test_per_class", "must be >= 1");
    if (!(d.spread >= 0.0)) issue("data.spread", "must be >= 0");
    if (d.classes >= 2 && d.train_per_class * static_cast<std::size_t>(d.classes) < c.n_clients) {
      issue("data.train_per_class", "too few training samples for " +
                                        std::to_string(c.n_clients) + " clients");
    }
  } else {
    if (d.train_csv.empty()) issue("data.train_csv", "required when source is csv");
    if (d.test_csv.empty()) issue("data.test_csv", "required when source is csv");
  }
  if (c.output_dir.empty()) issue("output.dir", "must not be empty");
}

}  // namespace

std::size_t LayerCount(const ModelConfig& model) { return model.hidden.size() + 1; }

RunConfig ParseConfig(std::string_view text, const std::string& base_dir) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
  RunConfig c;
  std::vector<FieldIssue> issues;
  Section root(&doc, "", issues);
  root.Read("seed", c.seed);
  {
    Section s = root.Child("strategy");
    s.ReadEnum("kind", c.strategy.kind, ParseStrategy,
               "fedavg, fedsgd, fedprox, fednova, splitfed, hierfl, hsfl, sherl");
    s.Read("margin", c.strategy.margin);
    s.Read("mu", c.strategy.mu);
    s.Read("local_epochs", c.strategy.local_epochs);
    s.Read("batch_size", c.strategy.batch_size);
    s.Read("pos_fraction", c.strategy.pos_fraction);
    s.ReadEnum("pairing", c.strategy.pairing, ParsePairing, "client, edge");
    s.Read("cloud_epochs", c.strategy.cloud_epochs);
    s.Read("global_client_sync", c.strategy.global_client_sync);
    Section o = s.Child("optimizer");
    o.ReadEnum("kind", c.strategy.optimizer.kind, ParseOptimizer, "sgd, adam");
    o.Read("lr", c.strategy.optimizer.lr);
    o.Read("beta1", c.strategy.optimizer.beta1);
    o.Read("beta2", c.strategy.optimizer.beta2);
    o.Read("eps", c.strategy.optimizer.eps);
    o.Finish();
    s.Finish();
  }
  {
    Section t = root.Child("topology");
    t.Read("n_clients", c.n_clients);
    t.Read("n_edges", c.n_edges);
    t.Finish();
  }
  {
    Section s = root.Child("schedule");
    s.Read("rounds", c.schedule.rounds);
    s.Read("t1", c.schedule.t1);
    s.Read("t2", c.schedule.t2);
    s.Read("sample_rate", c.schedule.sample_rate);
    s.Finish();
  }
  {
    Section m = root.Child("model");
    m.Read("hidden", c.model.hidden);
    m.Read("cut1", c.model.cut1);
    m.Read("cut2", c.model.cut2);
    m.Read("bytes_per_scalar", c.model.bytes_per_scalar);
    m.Finish();
  }
  {
    Section d = root.Child("data");
    d.ReadEnum("source", c.data.source, ParseSource, "blobs, csv");
    d.Read("classes", c.data.classes);
    d.Read("dim", c.data.dim);
    d.Read("train_per_class", c.data.train_per_class);
    d.Read("test_per_class", c.data.test_per_class);
    d.Read("spread", c.data.spread);
    d.Read("mask_grid", c.data.mask_grid);
    d.ReadEnum("partition", c.data.partition, ParsePartition, "iid, dirichlet, shards");
    d.Read("alpha", c.data.alpha);
    d.Read("shards_per_client", c.data.shards_per_client);
    d.Read("train_csv", c.data.train_csv);
    d.Read("test_csv", c.data.test_csv);
    d.Finish();
    c.data.train_csv = ResolvePath(c.data.train_csv, base_dir);
    c.data.test_csv = ResolvePath(c.data.test_csv, base_dir);
  }
  {
    Section e = root.Child("eval");
    e.Read("silhouette", c.eval_silhouette);
    e.Finish();
  }
  {
    Section o = root.Child("output");
    o.Read("dir", c.output_dir);
    o.Finish();
  }
  root.Finish();
  // Range checks run even after type errors; a field that failed to parse kept
  // its default, so only report it once.
  std::vector<FieldIssue> range;
  Validate(c, range);
  for (FieldIssue& r : range) {
    const bool seen = std::any_of(issues.begin(), issues.end(),
                                  [&](const FieldIssue& i) { return i.field == r.field; });
    if (!seen) issues.push_back(std::move(r));
  }
  if (!issues.empty()) throw ConfigError(std::move(issues));
  return c;
}

RunConfig LoadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open config");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const auto dir = std::filesystem::path(path).parent_path().string();
  return ParseConfig(buffer.str(), dir.empty() ? "." : dir);
}

std::string ConfigToJson(const RunConfig& c) {
  Json j;
  j["seed"] = c.seed;
  const StrategyConfig& s = c.strategy;
  j["strategy"] = {{"kind", StrategyName(s.kind)},
                   {"margin", s.margin},
                   {"mu", s.mu},
                   {"local_epochs", s.local_epochs},
                   {"batch_size", s.batch_size},
                   {"pos_fraction", s.pos_fraction},
                   {"pairing", PairingName(s.pairing)},
                   {"cloud_epochs", s.cloud_epochs},
                   {"global_client_sync", s.global_client_sync},
                   {"optimizer",
                    {{"kind", OptimizerName(s.optimizer.kind)},
                     {"lr", s.optimizer.lr},
                     {"beta1", s.optimizer.beta1},
                     {"beta2", s.optimizer.beta2},
                     {"eps", s.optimizer.eps}}}};
  j["topology"] = {{"n_clients", c.n_clients}, {"n_edges", c.n_edges}};
  j["schedule"] = {{"rounds", c.schedule.rounds},
                   {"t1", c.schedule.t1},
                   {"t2", c.schedule.t2},
                   {"sample_rate", c.schedule.sample_rate}};
  j["model"] = {{"hidden", c.model.hidden},
                {"cut1", c.model.cut1},
                {"cut2", c.model.cut2},
                {"bytes_per_scalar", c.model.bytes_per_scalar}};
  const DataConfig& d = c.data;
  j["data"] = {{"source", SourceName(d.source)},
               {"classes", d.classes},
               {"dim", d.dim},
               {"train_per_class", d.train_per_class},
               {"test_per_class", d.test_per_class},
               {"spread", d.spread},
               {"mask_grid", d.mask_grid},
               {"partition", PartitionName(d.partition)},
               {"alpha", d.alpha},
               {"shards_per_client", d.shards_per_client},
               {"train_csv", d.train_csv},
               {"test_csv", d.test_csv}};
  j["eval"] = {{"silhouette", c.eval_silhouette}};
  j["output"] = {{"dir", c.output_dir}};
  return j.dump(2);
}

namespace {

void AttachMasks(Dataset& ds, std::size_t grid) {
  if (grid == 0) return;
  ds.masks.clear();
  for (int label : ds.labels) ds.masks.push_back(MaskForClass(label, grid));
}

}  // namespace

Experiment BuildExperiment(const RunConfig& c) {
  Experiment e;
  if (c.data.source == DataSource::kBlobs) {
    BlobSpec spec;
    spec.classes = c.data.classes;
    spec.per_class = c.data.train_per_class + c.data.test_per_class;
    spec.dim = c.data.dim;
    spec.spread = c.data.spread;
    spec.seed = DeriveSeed(c.seed, {Tag(Stream::kData)});
    spec.mask_grid = c.data.mask_grid;
    TrainTest split = SplitPerClass(MakeBlobs(spec), c.data.test_per_class);
    e.train = std::move(split.train);
    e.test = std::move(split.test);
  } else {
    e.train = LoadCsvDataset(c.data.train_csv);
    e.test = LoadCsvDataset(c.data.test_csv);
    if (e.train.dim != e.test.dim) {
      throw ConfigError("data.test_csv", "feature count differs from train_csv");
    }
    const int classes = std::max(e.train.num_classes, e.test.num_classes);
    e.train.num_classes = e.test.num_classes = classes;
    AttachMasks(e.train, c.data.mask_grid);
    AttachMasks(e.test, c.data.mask_grid);
    if (e.train.size() < c.n_clients) {
      throw ConfigError("data.train_csv", "fewer training rows than clients");
    }
  }
  PartitionSpec part;
  part.mode = c.data.partition;
  part.n_clients = c.n_clients;
  part.alpha = c.data.alpha;
  part.shards_per_client = c.data.shards_per_client;
  part.seed = DeriveSeed(c.seed, {Tag(Stream::kPartition)});
  e.client_indices = Partition(e.train.labels, e.train.num_classes, part);
  e.strategy = c.strategy;
  e.topology = Topology::Contiguous(c.n_clients, c.n_edges);
  e.schedule = c.schedule;
  e.layers = MlpLayers(e.train.dim, c.model.hidden,
                       static_cast<std::size_t>(e.train.num_classes));
  e.cut1 = c.model.cut1;
  e.cut2 = c.model.cut2;
  e.bytes_per_scalar = c.model.bytes_per_scalar;
  e.seed = c.seed;
  e.eval_silhouette = c.eval_silhouette;
  return e;
}

}  // namespace tierfl
