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

#include "tierfl/losses.hpp"

#include <cmath>
#include <string>

#include "tierfl/error.hpp"

namespace tierfl {

Margin::Margin(double value) : value_(value) {
  if (!(value >= 0.0 && value <= 2.0)) {
    throw ContractError("margin " + std::to_string(value) + " outside [0,2]");
  }
}

double CosineMeasure(std::span<const double> ci, std::span<const double> cj) {
  if (ci.size() != cj.size()) throw DimensionError("cosine_measure: length mismatch");
  double dot = 0.0, a = 0.0, b = 0.0;
  for (std::size_t i = 0; i < ci.size(); ++i) {
    dot += ci[i] * cj[i];
    a += ci[i] * ci[i];
    b += cj[i] * cj[i];
  }
  if (a == 0.0 || b == 0.0) throw NumericError("cosine_measure: zero-norm vector");
  return dot / (std::sqrt(a) * std::sqrt(b));
}

Tensor CosineMeasure(Tape& tape, const Tensor& ci, const Tensor& cj) {
  if (ci.rank() != 1 || ci.shape() != cj.shape()) {
    throw DimensionError("cosine_measure: expected two vectors of equal length");
  }
  const std::size_t d = ci.size();
  Tensor cos = tape.RowCosine(tape.Slice(ci, 0, {1, d}), tape.Slice(cj, 0, {1, d}));
  return tape.Sum(cos);
}

Tensor ContrastiveLoss(Tape& tape, const Tensor& c1, const Tensor& c2,
                       std::span<const int> pair_labels, Margin margin) {
  if (c1.rank() != 2 || c1.rows() != pair_labels.size()) {
    throw DimensionError("contrastive_loss: need one pair label per row");
  }
  if (pair_labels.empty()) throw ContractError("contrastive_loss: no pairs");
  std::vector<double> y(pair_labels.size()), same(pair_labels.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (pair_labels[i] != 0 && pair_labels[i] != 1) {
      throw ContractError("contrastive_loss: pair label must be 0 or 1");
    }
    y[i] = pair_labels[i];
    same[i] = 1.0 - y[i];
  }
  Tensor cos = tape.RowCosine(c1, c2);
  Tensor hinge = tape.Relu(tape.AddScalar(tape.Scale(cos, -1.0), margin.value()));
  Tensor terms = tape.Add(tape.Mul(Tensor::Vector(std::move(y)), cos),
                          tape.Mul(Tensor::Vector(std::move(same)), hinge));
  return tape.Mean(terms);
}

Tensor CrossEntropy(Tape& tape, const Tensor& logits, std::span<const int> labels) {
  return tape.CrossEntropy(logits, labels);
}

Tensor ProximalTerm(Tape& tape, const Tensor& w, std::span<const double> w_global,
                    double mu) {
  if (!(mu >= 0.0)) throw ContractError("proximal_term: mu must be non-negative");
  if (w.rank() != 1 || w.size() != w_global.size()) {
    throw ContractError("proximal_term: parameter layouts differ");
  }
  Tensor anchor = Tensor::Vector(std::vector<double>(w_global.begin(), w_global.end()));
  Tensor diff = tape.Sub(w, anchor);
  return tape.Scale(tape.Sum(tape.Mul(diff, diff)), mu / 2.0);
}

Tensor ProximalTerm(Tape& tape, const Tensor& w, const SegmentLayout& layout,
                    const SegmentParams& global, double mu) {
  if (!(layout == global.layout)) {
    throw ContractError("proximal_term: parameter layouts differ");
  }
  return ProximalTerm(tape, w, global.flat, mu);
}

}  // namespace tierfl
