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

#ifndef TIERFL_TENSOR_HPP_
#define TIERFL_TENSOR_HPP_

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace tierfl {

using Shape = std::vector<std::size_t>;

std::size_t ShapeSize(const Shape& shape);
std::string ShapeString(const Shape& shape);

// Dense row-major array of doubles. A Tensor is a handle: copies alias the
// same storage. Values are immutable after construction; only the gradient
// buffer changes, and only through Tape::Backward or ZeroGrad.
class Tensor {
 public:
  Tensor();
  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

  static Tensor Scalar(double value, bool requires_grad = false);
  static Tensor Vector(std::vector<double> values, bool requires_grad = false);
  static Tensor Matrix(std::size_t rows, std::size_t cols,
                       std::vector<double> values, bool requires_grad = false);
  static Tensor Zeros(Shape shape, bool requires_grad = false);

  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t size() const;
  // Rank-2 accessors.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> data() const;
  double operator[](std::size_t i) const { return data()[i]; }
  double at(std::size_t r, std::size_t c) const;
  // Value of a single-element tensor.
  double item() const;

  bool requires_grad() const;
  bool has_grad() const;
  // Empty span when no gradient has been accumulated.
  std::span<const double> grad() const;
  void ZeroGrad();

  // Same values, no gradient tracking.
  Tensor Detach() const;
  bool SameStorage(const Tensor& other) const { return impl_ == other.impl_; }

 private:
  friend class Tape;
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

// Records differentiable operations for one execution context. Every simulated
// node owns its own tape; a tape is not thread-safe.
//
// An operation is recorded only when at least one input requires a gradient;
// the result then requires a gradient too. All operations raise NumericError
// when they would produce a non-finite value and DimensionError on shape
// mismatch.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Tensor MatMul(const Tensor& a, const Tensor& b);
  Tensor Add(const Tensor& a, const Tensor& b);
  Tensor Sub(const Tensor& a, const Tensor& b);
  Tensor Mul(const Tensor& a, const Tensor& b);
  // Gradient is 0 for inputs <= 0.
  Tensor Relu(const Tensor& a);
  Tensor Scale(const Tensor& a, double factor);
  Tensor AddScalar(const Tensor& a, double offset);
  // x[b x n] + bias[n] on every row.
  Tensor AddRowBias(const Tensor& x, const Tensor& bias);
  Tensor Sum(const Tensor& a);
  Tensor Mean(const Tensor& a);
  // Copies `ShapeSize(shape)` consecutive values of a flat tensor starting at
  // `offset`, reshaped. Gradients scatter back into the flat source.
  Tensor Slice(const Tensor& flat, std::size_t offset, Shape shape);
  Tensor SliceRows(const Tensor& x, std::size_t begin, std::size_t count);
  // Rows of x at `rows`, repeats allowed. Gradients scatter-add back.
  Tensor GatherRows(const Tensor& x, std::span<const std::size_t> rows);
  // Stacks rank-2 tensors with equal column counts.
  Tensor ConcatRows(std::span<const Tensor> parts);
  // Row-wise cosine similarity of two [b x d] matrices, returns [b].
  Tensor RowCosine(const Tensor& a, const Tensor& b);
  // Mean negative log-softmax of the labelled class, max-shifted.
  Tensor CrossEntropy(const Tensor& logits, std::span<const int> labels);

  // Reverse pass from a single-element loss. Gradients accumulate into every
  // requires-grad leaf; the tape is cleared afterwards.
  void Backward(const Tensor& loss);
  // Reverse pass seeded with an upstream gradient for a non-scalar output,
  // used when the rest of the chain lives on another node's tape.
  void Backward(const Tensor& output, std::span<const double> upstream);

  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }
  void Clear() { nodes_.clear(); }

 private:
  using Rule = std::function<void(std::span<const double> grad_out)>;
  struct Node {
    std::vector<Tensor> inputs;
    Tensor output;
    Rule rule;
  };

  Tensor Record(Tensor output, std::vector<Tensor> inputs, Rule rule);
  void Run(const Tensor& root, std::span<const double> seed);

  std::vector<Node> nodes_;
};

// f must build a single-element tensor from x on the given tape.
using ScalarFunction = std::function<Tensor(Tape&, const Tensor&)>;

// Largest |autodiff - central difference| / max(1, |central difference|) over
// the coordinates of x. An empty `coords` means every coordinate.
double GradientCheck(const ScalarFunction& f, const Tensor& x, double step,
                     std::span<const std::size_t> coords = {});

}  // namespace tierfl

#endif  // TIERFL_TENSOR_HPP_
