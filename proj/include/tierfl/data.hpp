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

#ifndef TIERFL_DATA_HPP_
#define TIERFL_DATA_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tierfl/metrics.hpp"
#include "tierfl/tensor.hpp"

namespace tierfl {

struct Dataset {
  std::size_t dim = 0;
  int num_classes = 0;
  std::vector<double> features;  // row-major [size() x dim]
  std::vector<int> labels;
  std::vector<BinaryMask> masks;  // empty, or one per sample

  std::size_t size() const { return labels.size(); }
  bool has_masks() const { return !masks.empty(); }
  Tensor Features() const;
  // Feature rows at `indices`, in order.
  Tensor Rows(std::span<const std::size_t> indices) const;
  Dataset Subset(std::span<const std::size_t> indices) const;
};

// Centered rectangle whose extent is a function of the class id.
BinaryMask MaskForClass(int label, std::size_t grid);

struct BlobSpec {
  int classes = 4;
  std::size_t per_class = 50;
  std::size_t dim = 16;
  double spread = 0.5;
  std::uint64_t seed = 0;
  // Side of the square segmentation mask attached to each sample; 0 disables.
  std::size_t mask_grid = 0;
};

// Gaussian clusters around class centers drawn uniformly from [-1, 1]^dim,
// noise standard deviation `spread`. Samples are ordered class by class.
Dataset MakeBlobs(const BlobSpec& spec);

struct TrainTest {
  Dataset train;
  Dataset test;
};
// Moves the last `test_per_class` samples of every class into the test set.
TrainTest SplitPerClass(const Dataset& ds, std::size_t test_per_class);

// Header row of feature columns plus one column named "label".
Dataset LoadCsvDataset(const std::string& path);

enum class PartitionMode { kIid, kDirichlet, kShards };

struct PartitionSpec {
  PartitionMode mode = PartitionMode::kIid;
  std::size_t n_clients = 1;
  double alpha = 0.3;                  // dirichlet concentration
  std::size_t shards_per_client = 2;   // shards mode
  std::uint64_t seed = 0;
};

// Disjoint index sets covering [0, n), one per client, each nonempty.
std::vector<std::vector<std::size_t>> Partition(std::span<const int> labels,
                                                int num_classes,
                                                const PartitionSpec& spec);

// Mean Shannon entropy (nats) of the per-client label histograms.
double MeanLabelEntropy(const std::vector<std::vector<std::size_t>>& parts,
                        std::span<const int> labels, int num_classes);

struct PairBatch {
  Tensor x1;
  Tensor x2;
  std::vector<int> y1;
  std::vector<int> y2;
  std::vector<int> pair_labels;  // 0 = same class
  // Set when the local data holds a single class and every pair is forced to
  // be same-class.
  bool single_class = false;

  std::size_t size() const { return y1.size(); }
};

struct PairIndices {
  std::vector<std::size_t> first;
  std::vector<std::size_t> second;
  std::vector<int> pair_labels;  // 0 = same class
  bool single_class = false;
};

// Index pairs into `labels`, drawn with replacement. Each pair is same-class
// with probability `pos_fraction` (forced when only one class is present).
PairIndices DrawPairs(std::span<const int> labels, int num_classes, std::size_t count,
                      double pos_fraction, std::uint64_t seed);

// `count` pairs drawn with replacement. Each pair is same-class with
// probability `pos_fraction` (forced when only one class is present).
PairBatch MakePairs(const Dataset& local, std::size_t count, double pos_fraction,
                    std::uint64_t seed);

}  // namespace tierfl

#endif  // TIERFL_DATA_HPP_
