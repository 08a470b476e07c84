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

#include "tierfl/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "tierfl/error.hpp"

namespace tierfl {
namespace {

Dataset Blobs(int classes, std::size_t per_class, std::uint64_t seed = 1) {
  BlobSpec spec;
  spec.classes = classes;
  spec.per_class = per_class;
  spec.dim = 5;
  spec.seed = seed;
  return MakeBlobs(spec);
}

void ExpectCover(const std::vector<std::vector<std::size_t>>& parts, std::size_t n) {
  std::vector<int> seen(n, 0);
  for (const auto& p : parts) {
    EXPECT_FALSE(p.empty());
    EXPECT_TRUE(std::is_sorted(p.begin(), p.end()));
    for (std::size_t i : p) {
      ASSERT_LT(i, n);
      ++seen[i];
    }
  }
  for (int s : seen) EXPECT_EQ(s, 1);
}

TEST(Blobs, ShapeOrderAndDeterminism) {
  const Dataset ds = Blobs(3, 4);
  EXPECT_EQ(ds.size(), 12u);
  EXPECT_EQ(ds.features.size(), 60u);
  EXPECT_EQ(ds.labels, (std::vector<int>{0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2}));
  EXPECT_EQ(ds.features, Blobs(3, 4).features);
  EXPECT_NE(ds.features, Blobs(3, 4, 2).features);
  EXPECT_FALSE(ds.has_masks());
}

TEST(Blobs, MasksFollowClass) {
  BlobSpec spec;
  spec.mask_grid = 8;
  const Dataset ds = MakeBlobs(spec);
  ASSERT_TRUE(ds.has_masks());
  EXPECT_EQ(ds.masks.front().cells, MaskForClass(0, 8).cells);
  EXPECT_NE(MaskForClass(0, 8).cells, MaskForClass(1, 8).cells);
}

TEST(Blobs, SplitPerClass) {
  const TrainTest tt = SplitPerClass(Blobs(4, 10), 3);
  EXPECT_EQ(tt.train.size(), 28u);
  EXPECT_EQ(tt.test.size(), 12u);
  for (int c = 0; c < 4; ++c) {
    EXPECT_EQ(std::count(tt.test.labels.begin(), tt.test.labels.end(), c), 3);
  }
  EXPECT_THROW(SplitPerClass(Blobs(2, 3), 3), ConfigError);
}

TEST(Partition, IidIsBalancedCover) {
  const Dataset ds = Blobs(4, 25);
  PartitionSpec spec;
  spec.n_clients = 7;
  const auto parts = Partition(ds.labels, 4, spec);
  ASSERT_EQ(parts.size(), 7u);
  ExpectCover(parts, ds.size());
  std::size_t lo = ds.size(), hi = 0;
  for (const auto& p : parts) {
    lo = std::min(lo, p.size());
    hi = std::max(hi, p.size());
  }
  EXPECT_LE(hi - lo, 1u);
}

TEST(Partition, DirichletSkewsLabels) {
  const Dataset ds = Blobs(4, 100);
  PartitionSpec iid;
  iid.n_clients = 10;
  iid.seed = 3;
  PartitionSpec dir = iid;
  dir.mode = PartitionMode::kDirichlet;
  dir.alpha = 0.1;
  const auto a = Partition(ds.labels, 4, iid);
  const auto b = Partition(ds.labels, 4, dir);
  ExpectCover(b, ds.size());
  EXPECT_LT(MeanLabelEntropy(b, ds.labels, 4), MeanLabelEntropy(a, ds.labels, 4));
  EXPECT_EQ(b, Partition(ds.labels, 4, dir));
}

TEST(Partition, LargeAlphaApproachesIid) {
  const Dataset ds = Blobs(4, 200);
  PartitionSpec dir;
  dir.mode = PartitionMode::kDirichlet;
  dir.n_clients = 8;
  dir.alpha = 1000.0;
  const auto parts = Partition(ds.labels, 4, dir);
  EXPECT_GT(MeanLabelEntropy(parts, ds.labels, 4), 0.95 * std::log(4.0));
}

TEST(Partition, ShardsLimitClassesPerClient) {
  const Dataset ds = Blobs(10, 20);
  PartitionSpec spec;
  spec.mode = PartitionMode::kShards;
  spec.n_clients = 10;
  spec.shards_per_client = 2;
  const auto parts = Partition(ds.labels, 10, spec);
  ExpectCover(parts, ds.size());
  for (const auto& p : parts) {
    std::set<int> classes;
    for (std::size_t i : p) classes.insert(ds.labels[i]);
    EXPECT_LE(classes.size(), 2u);
  }
}

TEST(Partition, TooFewSamples) {
  const std::vector<int> labels = {0, 1, 0};
  PartitionSpec spec;
  spec.n_clients = 4;
  EXPECT_THROW(Partition(labels, 2, spec), ConfigError);
}

TEST(Pairs, LabelsAreConsistent) {
  const Dataset ds = Blobs(3, 10);
  const PairBatch batch = MakePairs(ds, 50, 0.5, 9);
  ASSERT_EQ(batch.size(), 50u);
  EXPECT_EQ(batch.x1.rows(), 50u);
  EXPECT_FALSE(batch.single_class);
  int same = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    EXPECT_EQ(batch.pair_labels[i], batch.y1[i] == batch.y2[i] ? 0 : 1);
    same += batch.pair_labels[i] == 0;
  }
  EXPECT_GT(same, 10);
  EXPECT_LT(same, 40);
}

TEST(Pairs, ExtremeFractions) {
  const Dataset ds = Blobs(3, 10);
  for (int y : MakePairs(ds, 20, 1.0, 1).pair_labels) EXPECT_EQ(y, 0);
  for (int y : MakePairs(ds, 20, 0.0, 1).pair_labels) EXPECT_EQ(y, 1);
}

TEST(Pairs, SingleClassIsFlagged) {
  const Dataset ds = Blobs(3, 10);
  const std::vector<std::size_t> idx = {0, 1, 2, 3};
  const PairBatch batch = MakePairs(ds.Subset(idx), 8, 0.0, 1);
  EXPECT_TRUE(batch.single_class);
  for (int y : batch.pair_labels) EXPECT_EQ(y, 0);
  const std::vector<std::size_t> one = {0};
  EXPECT_THROW(MakePairs(ds.Subset(one), 1, 0.5, 1), ContractError);
}

TEST(Pairs, IndexDrawMatchesBatch) {
  const Dataset ds = Blobs(4, 6);
  const PairIndices idx = DrawPairs(ds.labels, ds.num_classes, 30, 0.5, 4);
  const PairBatch batch = MakePairs(ds, 30, 0.5, 4);
  ASSERT_EQ(idx.first.size(), 30u);
  for (std::size_t p = 0; p < 30; ++p) {
    EXPECT_EQ(ds.labels[idx.first[p]], batch.y1[p]);
    EXPECT_EQ(ds.labels[idx.second[p]], batch.y2[p]);
    EXPECT_EQ(idx.pair_labels[p], batch.pair_labels[p]);
  }
  const std::vector<int> bad = {0, 7};
  EXPECT_THROW(DrawPairs(bad, 2, 1, 0.5, 1), ContractError);
}

TEST(Csv, LoadsAndReportsErrors) {
  const auto dir = std::filesystem::temp_directory_path() / "tierfl_csv_test";
  std::filesystem::create_directories(dir);
  const auto good = dir / "good.csv";
  std::ofstream(good) << "a,label,b\n1.5,2,3\n-1,0,0.25\n";
  const Dataset ds = LoadCsvDataset(good.string());
  EXPECT_EQ(ds.dim, 2u);
  EXPECT_EQ(ds.num_classes, 3);
  EXPECT_EQ(ds.labels, (std::vector<int>{2, 0}));
  EXPECT_EQ(ds.features, (std::vector<double>{1.5, 3, -1, 0.25}));

  const auto bad = dir / "bad.csv";
  std::ofstream(bad) << "a,b\n1,2\n";
  EXPECT_THROW(LoadCsvDataset(bad.string()), IoError);
  try {
    LoadCsvDataset((dir / "missing.csv").string());
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(e.path().find("missing.csv"), std::string::npos);
  }
}

}  // namespace
}  // namespace tierfl
