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

#ifndef TIERFL_METRICS_HPP_
#define TIERFL_METRICS_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tierfl/tensor.hpp"

namespace tierfl {

// Unweighted mean of per-class F1 over classes [0, num_classes). A class that
// never occurs in predictions or labels scores 0.
double MacroF1(std::span<const int> predictions, std::span<const int> labels,
               int num_classes);

struct BinaryMask {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> cells;  // row-major, 0 or 1
};

struct Overlap {
  double iou = 0.0;
  double dice = 0.0;
};

// Both scores are 1 when both masks are empty.
Overlap IouDice(const BinaryMask& predicted, const BinaryMask& truth);

// Mean silhouette coefficient under Euclidean distance. Every class that
// appears needs at least two points and at least two classes must appear.
double EmbeddingSeparation(const Tensor& embeddings, std::span<const int> labels);

}  // namespace tierfl

#endif  // TIERFL_METRICS_HPP_
