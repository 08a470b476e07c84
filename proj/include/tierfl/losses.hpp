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

#ifndef TIERFL_LOSSES_HPP_
#define TIERFL_LOSSES_HPP_

#include <span>

#include "tierfl/model.hpp"
#include "tierfl/tensor.hpp"

namespace tierfl {

// Hinge margin of the contrastive loss, constrained to [0, 2]. Values above 1
// are accepted even though cosine similarity never exceeds 1; such margins keep
// the same-class term positive at perfect alignment.
class Margin {
 public:
  explicit Margin(double value);
  double value() const { return value_; }

 private:
  double value_;
};

// 0 when both samples share a class, 1 otherwise.
inline int PairLabel(int y1, int y2) { return y1 == y2 ? 0 : 1; }

// c_i . c_j / (|c_i| |c_j|). NumericError on a zero vector.
double CosineMeasure(std::span<const double> ci, std::span<const double> cj);
Tensor CosineMeasure(Tape& tape, const Tensor& ci, const Tensor& cj);

// Mean over rows of
//   y * cos(c1, c2) + (1 - y) * max(0, m - cos(c1, c2))
// with y = 0 for same-class pairs. Row i of `c1` is paired with row i of `c2`.
// The hinge has zero gradient at cos == m.
Tensor ContrastiveLoss(Tape& tape, const Tensor& c1, const Tensor& c2,
                       std::span<const int> pair_labels, Margin margin);

Tensor CrossEntropy(Tape& tape, const Tensor& logits, std::span<const int> labels);

// (mu / 2) * |w - w_global|^2.
Tensor ProximalTerm(Tape& tape, const Tensor& w, std::span<const double> w_global,
                    double mu);
Tensor ProximalTerm(Tape& tape, const Tensor& w, const SegmentLayout& layout,
                    const SegmentParams& global, double mu);

}  // namespace tierfl

#endif  // TIERFL_LOSSES_HPP_
