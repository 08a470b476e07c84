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
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "tierfl/error.hpp"
#include "tierfl/rng.hpp"

namespace tierfl {

Tensor Dataset::Features() const {
  return Tensor::Matrix(size(), dim, features);
}

Tensor Dataset::Rows(std::span<const std::size_t> indices) const {
  std::vector<double> out;
  out.reserve(indices.size() * dim);
  for (std::size_t i : indices) {
    if (i >= size()) throw ContractError("dataset: row index out of range");
    out.insert(out.end(), features.begin() + static_cast<std::ptrdiff_t>(i * dim),
               features.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim));
  }
  return Tensor::Matrix(indices.size(), dim, std::move(out));
}

Dataset Dataset::Subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.dim = dim;
  out.num_classes = num_classes;
  for (std::size_t i : indices) {
    if (i >= size()) throw ContractError("dataset: row index out of range");
    out.features.insert(out.features.end(),
                        features.begin() + static_cast<std::ptrdiff_t>(i * dim),
                        features.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim));
    out.labels.push_back(labels[i]);
    if (has_masks()) out.masks.push_back(masks[i]);
  }
  return out;
}

BinaryMask MaskForClass(int label, std::size_t grid) {
  BinaryMask mask{grid, grid, std::vector<std::uint8_t>(grid * grid, 0)};
  const std::size_t half = std::max<std::size_t>(grid / 2, 1);
  const std::size_t h = 1 + static_cast<std::size_t>(label) % half;
  const std::size_t w = half - static_cast<std::size_t>(label) % half;
  const std::size_t r0 = grid / 2 >= h ? grid / 2 - h : 0;
  const std::size_t c0 = grid / 2 >= w ? grid / 2 - w : 0;
  for (std::size_t r = r0; r < std::min(grid, grid / 2 + h); ++r) {
    for (std::size_t c = c0; c < std::min(grid, grid / 2 + w); ++c) {
      mask.cells[r * grid + c] = 1;
    }
  }
  return mask;
}

Dataset MakeBlobs(const BlobSpec& spec) {
  if (spec.classes < 2) throw ContractError("make_blobs: need at least two classes");
  if (spec.per_class < 1) throw ContractError("make_blobs: per_class must be positive");
  if (spec.dim < 1) throw ContractError("make_blobs: dim must be positive");
  if (!(spec.spread >= 0.0)) throw ContractError("make_blobs: spread must be >= 0");
  Rng rng(DeriveSeed(spec.seed, {Tag(Stream::kData)}));
  std::vector<double> centers(static_cast<std::size_t>(spec.classes) * spec.dim);
  for (double& c : centers) c = rng.Uniform(-1.0, 1.0);
  Dataset ds;
  ds.dim = spec.dim;
  ds.num_classes = spec.classes;
  for (int c = 0; c < spec.classes; ++c) {
    for (std::size_t i = 0; i < spec.per_class; ++i) {
      for (std::size_t j = 0; j < spec.dim; ++j) {
        const double noise = spec.spread > 0.0 ? spec.spread * rng.Normal() : 0.0;
        ds.features.push_back(centers[static_cast<std::size_t>(c) * spec.dim + j] + noise);
      }
      ds.labels.push_back(c);
      if (spec.mask_grid > 0) ds.masks.push_back(MaskForClass(c, spec.mask_grid));
    }
  }
  return ds;
}

TrainTest SplitPerClass(const Dataset& ds, std::size_t test_per_class) {
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(ds.num_classes));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    by_class[static_cast<std::size_t>(ds.labels[i])].push_back(i);
  }
  std::vector<std::size_t> train, test;
  for (const auto& members : by_class) {
    if (members.size() <= test_per_class) {
      throw ConfigError("data.test_per_class",
                        "every class needs more samples than test_per_class");
    }
    const std::size_t cut = members.size() - test_per_class;
    train.insert(train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(cut));
    test.insert(test.end(), members.begin() + static_cast<std::ptrdiff_t>(cut), members.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {ds.Subset(train), ds.Subset(test)};
}

namespace {

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream in(line);
  std::string cell;
  while (std::getline(in, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    cells.push_back(cell);
  }
  return cells;
}

template <typename T>
bool ParseNumber(const std::string& text, T& out) {
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace

Dataset LoadCsvDataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open");
  std::string line;
  if (!std::getline(in, line)) throw IoError(path, "missing header row");
  const auto header = SplitCsvLine(line);
  auto label_it = std::find(header.begin(), header.end(), "label");
  if (label_it == header.end()) throw IoError(path, "no \"label\" column");
  const std::size_t label_col = static_cast<std::size_t>(label_it - header.begin());
  Dataset ds;
  ds.dim = header.size() - 1;
  if (ds.dim == 0) throw IoError(path, "no feature columns");
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = SplitCsvLine(line);
    if (cells.size() != header.size()) {
      throw IoError(path, "line " + std::to_string(line_no) + ": expected " +
                              std::to_string(header.size()) + " columns");
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c == label_col) {
        int y;
        if (!ParseNumber(cells[c], y) || y < 0) {
          throw IoError(path, "line " + std::to_string(line_no) + ": bad label");
        }
        ds.labels.push_back(y);
        ds.num_classes = std::max(ds.num_classes, y + 1);
      } else {
        double v;
        if (!ParseNumber(cells[c], v) || !std::isfinite(v)) {
          throw IoError(path, "line " + std::to_string(line_no) + ": bad feature value");
        }
        ds.features.push_back(v);
      }
    }
  }
  if (ds.size() == 0) throw IoError(path, "no data rows");
  return ds;
}

namespace {

void Shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[rng.UniformInt(i)]);
  }
}

// Integer counts summing to `total`, proportional to `weights`; leftover units
// go to the largest fractional parts (lowest index first on ties).
std::vector<std::size_t> LargestRemainder(std::span<const double> weights,
                                          std::size_t total) {
  std::vector<std::size_t> counts(weights.size());
  std::vector<std::pair<double, std::size_t>> frac;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double exact = weights[i] * static_cast<double>(total);
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    assigned += counts[i];
    frac.push_back({exact - std::floor(exact), i});
  }
  std::stable_sort(frac.begin(), frac.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) {
    counts[frac[k % frac.size()].second] += 1;
  }
  return counts;
}

}  // namespace

std::vector<std::vector<std::size_t>> Partition(std::span<const int> labels,
                                                int num_classes,
                                                const PartitionSpec& spec) {
  const std::size_t n = labels.size();
  const std::size_t k = spec.n_clients;
  if (k == 0) throw ConfigError("topology.clients", "must be positive");
  if (n < k) {
    throw ConfigError("data.partition", "cannot give " + std::to_string(k) +
                                            " clients at least one of " +
                                            std::to_string(n) + " samples");
  }
  Rng rng(DeriveSeed(spec.seed, {Tag(Stream::kPartition)}));
  std::vector<std::vector<std::size_t>> parts(k);

  switch (spec.mode) {
    case PartitionMode::kIid: {
      std::vector<std::size_t> idx(n);
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      Shuffle(idx, rng);
      std::size_t pos = 0;
      for (std::size_t c = 0; c < k; ++c) {
        const std::size_t take = n / k + (c < n % k ? 1 : 0);
        parts[c].assign(idx.begin() + static_cast<std::ptrdiff_t>(pos),
                        idx.begin() + static_cast<std::ptrdiff_t>(pos + take));
        pos += take;
      }
      break;
    }
    case PartitionMode::kDirichlet: {
      if (!(spec.alpha > 0.0)) throw ConfigError("data.alpha", "must be positive");
      std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(num_classes));
      for (std::size_t i = 0; i < n; ++i) {
        by_class.at(static_cast<std::size_t>(labels[i])).push_back(i);
      }
      for (auto& members : by_class) {
        Shuffle(members, rng);
        std::vector<double> p(k);
        double sum = 0.0;
        for (double& v : p) sum += (v = rng.Gamma(spec.alpha));
        if (sum > 0.0) {
          for (double& v : p) v /= sum;
        } else {
          std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(k));
        }
        const auto counts = LargestRemainder(p, members.size());
        std::size_t pos = 0;
        for (std::size_t c = 0; c < k; ++c) {
          for (std::size_t t = 0; t < counts[c]; ++t) parts[c].push_back(members[pos++]);
        }
      }
      // Repair: every client needs at least one sample.
      for (std::size_t c = 0; c < k; ++c) {
        if (!parts[c].empty()) continue;
        std::size_t largest = 0;
        for (std::size_t j = 1; j < k; ++j) {
          if (parts[j].size() > parts[largest].size()) largest = j;
        }
        parts[c].push_back(parts[largest].back());
        parts[largest].pop_back();
      }
      break;
    }
    case PartitionMode::kShards: {
      const std::size_t per = spec.shards_per_client;
      if (per == 0) throw ConfigError("data.shards_per_client", "must be positive");
      const std::size_t shards = k * per;
      if (n < shards) {
        throw ConfigError("data.shards_per_client",
                          std::to_string(shards) + " shards exceed " +
                              std::to_string(n) + " samples");
      }
      std::vector<std::size_t> idx(n);
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      std::stable_sort(idx.begin(), idx.end(),
                       [&](std::size_t a, std::size_t b) { return labels[a] < labels[b]; });
      std::vector<std::size_t> order(shards);
      std::iota(order.begin(), order.end(), std::size_t{0});
      Shuffle(order, rng);
      std::vector<std::size_t> start(shards + 1, 0);
      for (std::size_t s = 0; s < shards; ++s) {
        start[s + 1] = start[s] + n / shards + (s < n % shards ? 1 : 0);
      }
      for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t t = 0; t < per; ++t) {
          const std::size_t s = order[c * per + t];
          for (std::size_t i = start[s]; i < start[s + 1]; ++i) parts[c].push_back(idx[i]);
        }
      }
      break;
    }
  }
  for (auto& p : parts) std::sort(p.begin(), p.end());
  return parts;
}

double MeanLabelEntropy(const std::vector<std::vector<std::size_t>>& parts,
                        std::span<const int> labels, int num_classes) {
  if (parts.empty()) return 0.0;
  double total = 0.0;
  for (const auto& p : parts) {
    std::vector<double> hist(static_cast<std::size_t>(num_classes), 0.0);
    for (std::size_t i : p) hist[static_cast<std::size_t>(labels[i])] += 1;
    double h = 0.0;
    for (double c : hist) {
      if (c > 0) {
        const double q = c / static_cast<double>(p.size());
        h -= q * std::log(q);
      }
    }
    total += h;
  }
  return total / static_cast<double>(parts.size());
}

PairIndices DrawPairs(std::span<const int> labels, int num_classes, std::size_t count,
                      double pos_fraction, std::uint64_t seed) {
  if (labels.size() < 2) throw ContractError("make_pairs: need at least two samples");
  if (count == 0) throw ContractError("make_pairs: need at least one pair");
  if (!(pos_fraction >= 0.0 && pos_fraction <= 1.0)) {
    throw ContractError("make_pairs: pos_fraction outside [0, 1]");
  }
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(num_classes));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes) {
      throw ContractError("make_pairs: label out of range");
    }
    by_class[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  std::size_t present = 0;
  for (const auto& members : by_class) present += !members.empty();
  PairIndices pairs;
  pairs.single_class = present == 1;
  Rng rng(seed);
  std::vector<std::size_t> others;
  for (std::size_t p = 0; p < count; ++p) {
    const bool same = pairs.single_class || rng.Bernoulli(pos_fraction);
    const std::size_t i = rng.UniformInt(labels.size());
    const int yi = labels[i];
    std::size_t j;
    if (same) {
      const auto& members = by_class[static_cast<std::size_t>(yi)];
      j = members[rng.UniformInt(members.size())];
    } else {
      others.clear();
      for (std::size_t t = 0; t < labels.size(); ++t) {
        if (labels[t] != yi) others.push_back(t);
      }
      j = others[rng.UniformInt(others.size())];
    }
    pairs.first.push_back(i);
    pairs.second.push_back(j);
    pairs.pair_labels.push_back(yi == labels[j] ? 0 : 1);
  }
  return pairs;
}

PairBatch MakePairs(const Dataset& local, std::size_t count, double pos_fraction,
                    std::uint64_t seed) {
  const PairIndices idx = DrawPairs(local.labels, local.num_classes, count, pos_fraction, seed);
  PairBatch batch;
  batch.single_class = idx.single_class;
  batch.pair_labels = idx.pair_labels;
  for (std::size_t p = 0; p < idx.first.size(); ++p) {
    batch.y1.push_back(local.labels[idx.first[p]]);
    batch.y2.push_back(local.labels[idx.second[p]]);
  }
  batch.x1 = local.Rows(idx.first);
  batch.x2 = local.Rows(idx.second);
  return batch;
}

}  // namespace tierfl
