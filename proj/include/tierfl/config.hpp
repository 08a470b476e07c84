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

#ifndef TIERFL_CONFIG_HPP_
#define TIERFL_CONFIG_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "tierfl/data.hpp"
#include "tierfl/protocol.hpp"

namespace tierfl {

enum class DataSource { kBlobs, kCsv };

struct DataConfig {
  DataSource source = DataSource::kBlobs;
  int classes = 10;
  std::size_t dim = 16;
  std::size_t train_per_class = 200;
  std::size_t test_per_class = 50;
  double spread = 0.5;
  std::size_t mask_grid = 0;
  PartitionMode partition = PartitionMode::kDirichlet;
  double alpha = 0.3;
  std::size_t shards_per_client = 2;
  // csv source; relative paths resolve against the config file's directory.
  std::string train_csv;
  std::string test_csv;
};

struct ModelConfig {
  std::vector<std::size_t> hidden{64, 64, 32, 32};
  std::size_t cut1 = 2;
  std::size_t cut2 = 4;
  std::size_t bytes_per_scalar = 4;
};

struct RunConfig {
  std::uint64_t seed = 0;
  StrategyConfig strategy;
  std::size_t n_clients = 200;
  std::size_t n_edges = 10;
  Schedule schedule;
  ModelConfig model;
  DataConfig data;
  bool eval_silhouette = true;
  std::string output_dir = "runs/default";
};

// JSON document with optional sections seed, strategy, topology, schedule,
// model, data, eval and output. Missing keys take their defaults. Every
// unknown key, type mismatch and range violation is reported in one
// ConfigError. `base_dir` anchors relative csv paths.
RunConfig ParseConfig(std::string_view text, const std::string& base_dir = ".");
RunConfig LoadConfig(const std::string& path);
// Canonical JSON form; ParseConfig(ConfigToJson(c)) == c.
std::string ConfigToJson(const RunConfig& config);

// Number of layers of the configured model, head included.
std::size_t LayerCount(const ModelConfig& model);

// Generates or loads the data, partitions it and assembles the experiment.
Experiment BuildExperiment(const RunConfig& config);

}  // namespace tierfl

#endif  // TIERFL_CONFIG_HPP_
