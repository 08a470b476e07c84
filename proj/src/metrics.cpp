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

#include "tierfl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "tierfl/error.hpp"

namespace tierfl {

double MacroF1(std::span<const int> predictions, std::span<const int> labels,
               int num_classes) {
  if (predictions.empty()) throw ContractError("macro_f1: empty input");
  if (predictions.size() != labels.size()) {
    throw ContractError("macro_f1: predictions and labels differ in length");
  }
  if (num_classes < 1) throw ContractError("macro_f1: need at least one class");
  std::vector<double> tp(num_classes), fp(num_classes), fn(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int p = predictions[i], y = labels[i];
    if (p < 0 || p >= num_classes || y < 0 || y >= num_classes) {
      throw ContractError("macro_f1: class id out of range");
    }
    if (p == y) {
      tp[y] += 1;
    } else {
      fp[p] += 1;
      fn[y] += 1;
    }
  }
  double total = 0.0;
  for (int c = 0; c < num_classes; ++c) {
    const double denom = 2 * tp[c] + fp[c] + fn[c];
    total += denom > 0 ? 2 * tp[c] / denom : 0.0;
  }
  return total / num_classes;
}

Overlap IouDice(const BinaryMask& predicted, const BinaryMask& truth) {
  if (predicted.rows != truth.rows || predicted.cols != truth.cols ||
      predicted.cells.size() != truth.cells.size()) {
    throw ContractError("iou_dice: mask shapes differ");
  }
  std::size_t inter = 0, a = 0, b = 0;
  for (std::size_t i = 0; i < truth.cells.size(); ++i) {
    const bool p = predicted.cells[i] != 0, t = truth.cells[i] != 0;
    inter += p && t;
    a += p;
    b += t;
  }
  const std::size_t uni = a + b - inter;
  if (uni == 0) return {1.0, 1.0};
  return {static_cast<double>(inter) / static_cast<double>(uni),
          2.0 * static_cast<double>(inter) / static_cast<double>(a + b)};
}

double EmbeddingSeparation(const Tensor& embeddings, std::span<const int> labels) {
  if (embeddings.rank() != 2 || embeddings.rows() != labels.size()) {
    throw ContractError("embedding_separation: need one label per embedding row");
  }
  std::map<int, std::size_t> counts;
  for (int y : labels) ++counts[y];
  if (counts.size() < 2) {
    throw ContractError("embedding_separation: need at least two classes");
  }
  for (const auto& [label, n] : counts) {
    if (n < 2) {
      throw ContractError("embedding_separation: class " + std::to_string(label) +
                          " has fewer than two points");
    }
  }
  std::vector<int> cls;
  std::map<int, std::size_t> index;
  for (const auto& [label, n] : counts) {
    index[label] = cls.size();
    cls.push_back(label);
  }
  const std::size_t n = labels.size(), d = embeddings.cols(), k = cls.size();
  const auto x = embeddings.data();
  std::vector<std::size_t> group(n);
  std::vector<double> group_size(k);
  for (std::size_t i = 0; i < n; ++i) {
    group[i] = index[labels[i]];
    group_size[group[i]] += 1;
  }
  double total = 0.0;
  std::vector<double> sums(k);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      double s = 0.0;
      for (std::size_t t = 0; t < d; ++t) {
        const double diff = x[i * d + t] - x[j * d + t];
        s += diff * diff;
      }
      sums[group[j]] += std::sqrt(s);
    }
    const double a = sums[group[i]] / (group_size[group[i]] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < k; ++g) {
      if (g != group[i]) b = std::min(b, sums[g] / group_size[g]);
    }
    const double denom = std::max(a, b);
    total += denom > 0 ? (b - a) / denom : 0.0;
  }
  return total / static_cast<double>(n);
}

}  // namespace tierfl
