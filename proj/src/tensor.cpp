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

#include "tierfl/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <utility>

#include "tierfl/error.hpp"

namespace tierfl {

struct Tensor::Impl {
  Shape shape;
  std::vector<double> data;
  bool requires_grad = false;
  std::vector<double> grad;

  void Accumulate(std::size_t i, double v) {
    if (grad.empty()) grad.assign(data.size(), 0.0);
    grad[i] += v;
  }
  std::vector<double>& GradBuffer() {
    if (grad.empty()) grad.assign(data.size(), 0.0);
    return grad;
  }
};

std::size_t ShapeSize(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string ShapeString(const Shape& shape) {
  std::ostringstream out;
  out << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << "x";
    out << shape[i];
  }
  out << "]";
  return out.str();
}

namespace {

void CheckFinite(std::span<const double> values, const char* op) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string(op) + ": non-finite result");
    }
  }
}

void RequireSameShape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         ShapeString(a.shape()) + " vs " + ShapeString(b.shape()));
  }
}

void RequireRank(const Tensor& a, std::size_t rank, const char* op) {
  if (a.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " +
                         std::to_string(rank) + ", got " + ShapeString(a.shape()));
  }
}

}  // namespace

Tensor::Tensor() : impl_(std::make_shared<Impl>()) {
  impl_->data.assign(1, 0.0);
}

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad)
    : impl_(std::make_shared<Impl>()) {
  for (std::size_t d : shape) {
    if (d == 0) throw DimensionError("tensor dimensions must be positive");
  }
  if (data.size() != ShapeSize(shape)) {
    throw DimensionError("tensor data length " + std::to_string(data.size()) +
                         " does not match shape " + ShapeString(shape));
  }
  CheckFinite(data, "tensor");
  impl_->shape = std::move(shape);
  impl_->data = std::move(data);
  impl_->requires_grad = requires_grad;
}

Tensor Tensor::Scalar(double value, bool requires_grad) {
  return Tensor({}, {value}, requires_grad);
}

Tensor Tensor::Vector(std::vector<double> values, bool requires_grad) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values), requires_grad);
}

Tensor Tensor::Matrix(std::size_t rows, std::size_t cols,
                      std::vector<double> values, bool requires_grad) {
  return Tensor({rows, cols}, std::move(values), requires_grad);
}

Tensor Tensor::Zeros(Shape shape, bool requires_grad) {
  const std::size_t n = ShapeSize(shape);
  return Tensor(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

const Shape& Tensor::shape() const { return impl_->shape; }
std::size_t Tensor::size() const { return impl_->data.size(); }

std::size_t Tensor::rows() const {
  RequireRank(*this, 2, "rows");
  return impl_->shape[0];
}

std::size_t Tensor::cols() const {
  RequireRank(*this, 2, "cols");
  return impl_->shape[1];
}

std::span<const double> Tensor::data() const { return impl_->data; }

double Tensor::at(std::size_t r, std::size_t c) const {
  return impl_->data[r * cols() + c];
}

double Tensor::item() const {
  if (size() != 1) {
    throw ContractError("item() on tensor of shape " + ShapeString(shape()));
  }
  return impl_->data[0];
}

bool Tensor::requires_grad() const { return impl_->requires_grad; }
bool Tensor::has_grad() const { return !impl_->grad.empty(); }
std::span<const double> Tensor::grad() const { return impl_->grad; }
void Tensor::ZeroGrad() { impl_->grad.clear(); }

Tensor Tensor::Detach() const {
  Tensor out;
  out.impl_->shape = impl_->shape;
  out.impl_->data = impl_->data;
  return out;
}

Tensor Tape::Record(Tensor output, std::vector<Tensor> inputs, Rule rule) {
  const bool tracked = std::any_of(inputs.begin(), inputs.end(),
                                   [](const Tensor& t) { return t.requires_grad(); });
  if (!tracked) return output;
  output.impl_->requires_grad = true;
  nodes_.push_back(Node{std::move(inputs), output, std::move(rule)});
  return output;
}

Tensor Tape::MatMul(const Tensor& a, const Tensor& b) {
  RequireRank(a, 2, "matmul");
  RequireRank(b, 2, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) {
    throw DimensionError("matmul: inner dimensions differ " +
                         ShapeString(a.shape()) + " x " + ShapeString(b.shape()));
  }
  std::vector<double> out(m * n, 0.0);
  const auto A = a.data(), B = b.data();
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = A[i * k + p];
      const double* brow = B.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += av * brow[j];
    }
  }
  CheckFinite(out, "matmul");
  Tensor result({m, n}, std::move(out));
  return Record(result, {a, b}, [a, b, m, k, n](std::span<const double> g) {
    const auto A = a.data(), B = b.data();
    if (a.requires_grad()) {
      auto& ga = a.impl_->GradBuffer();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += g[i * n + j] * B[p * n + j];
          ga[i * k + p] += s;
        }
      }
    }
    if (b.requires_grad()) {
      auto& gb = b.impl_->GradBuffer();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const double av = A[i * k + p];
          for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += av * g[i * n + j];
        }
      }
    }
  });
}

Tensor Tape::Add(const Tensor& a, const Tensor& b) {
  RequireSameShape(a, b, "add");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  CheckFinite(out, "add");
  return Record(Tensor(a.shape(), std::move(out)), {a, b},
                [a, b](std::span<const double> g) {
                  for (const Tensor* t : {&a, &b}) {
                    if (!t->requires_grad()) continue;
                    auto& gt = t->impl_->GradBuffer();
                    for (std::size_t i = 0; i < g.size(); ++i) gt[i] += g[i];
                  }
                });
}

Tensor Tape::Sub(const Tensor& a, const Tensor& b) {
  RequireSameShape(a, b, "sub");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  CheckFinite(out, "sub");
  return Record(Tensor(a.shape(), std::move(out)), {a, b},
                [a, b](std::span<const double> g) {
                  if (a.requires_grad()) {
                    auto& ga = a.impl_->GradBuffer();
                    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                  }
                  if (b.requires_grad()) {
                    auto& gb = b.impl_->GradBuffer();
                    for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
                  }
                });
}

Tensor Tape::Mul(const Tensor& a, const Tensor& b) {
  RequireSameShape(a, b, "mul");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  CheckFinite(out, "mul");
  return Record(Tensor(a.shape(), std::move(out)), {a, b},
                [a, b](std::span<const double> g) {
                  if (a.requires_grad()) {
                    auto& ga = a.impl_->GradBuffer();
                    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * b[i];
                  }
                  if (b.requires_grad()) {
                    auto& gb = b.impl_->GradBuffer();
                    for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * a[i];
                  }
                });
}

Tensor Tape::Relu(const Tensor& a) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] > 0.0 ? a[i] : 0.0;
  return Record(Tensor(a.shape(), std::move(out)), {a},
                [a](std::span<const double> g) {
                  auto& ga = a.impl_->GradBuffer();
                  for (std::size_t i = 0; i < g.size(); ++i) {
                    if (a[i] > 0.0) ga[i] += g[i];
                  }
                });
}

Tensor Tape::Scale(const Tensor& a, double factor) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * factor;
  CheckFinite(out, "scale");
  return Record(Tensor(a.shape(), std::move(out)), {a},
                [a, factor](std::span<const double> g) {
                  auto& ga = a.impl_->GradBuffer();
                  for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * factor;
                });
}

Tensor Tape::AddScalar(const Tensor& a, double offset) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + offset;
  CheckFinite(out, "add_scalar");
  return Record(Tensor(a.shape(), std::move(out)), {a},
                [a](std::span<const double> g) {
                  auto& ga = a.impl_->GradBuffer();
                  for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                });
}

Tensor Tape::AddRowBias(const Tensor& x, const Tensor& bias) {
  RequireRank(x, 2, "add_row_bias");
  RequireRank(bias, 1, "add_row_bias");
  const std::size_t r = x.rows(), c = x.cols();
  if (bias.size() != c) {
    throw DimensionError("add_row_bias: bias " + ShapeString(bias.shape()) +
                         " vs input " + ShapeString(x.shape()));
  }
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = x[i * c + j] + bias[j];
  }
  CheckFinite(out, "add_row_bias");
  return Record(Tensor(x.shape(), std::move(out)), {x, bias},
                [x, bias, r, c](std::span<const double> g) {
                  if (x.requires_grad()) {
                    auto& gx = x.impl_->GradBuffer();
                    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
                  }
                  if (bias.requires_grad()) {
                    auto& gb = bias.impl_->GradBuffer();
                    for (std::size_t i = 0; i < r; ++i) {
                      for (std::size_t j = 0; j < c; ++j) gb[j] += g[i * c + j];
                    }
                  }
                });
}

Tensor Tape::Sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  CheckFinite({&s, 1}, "sum");
  return Record(Tensor::Scalar(s), {a}, [a](std::span<const double> g) {
    auto& ga = a.impl_->GradBuffer();
    for (double& v : ga) v += g[0];
  });
}

Tensor Tape::Mean(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  const double n = static_cast<double>(a.size());
  const double mean = s / n;
  CheckFinite({&mean, 1}, "mean");
  return Record(Tensor::Scalar(mean), {a}, [a, n](std::span<const double> g) {
    auto& ga = a.impl_->GradBuffer();
    for (double& v : ga) v += g[0] / n;
  });
}

Tensor Tape::Slice(const Tensor& flat, std::size_t offset, Shape shape) {
  const std::size_t n = ShapeSize(shape);
  if (offset + n > flat.size()) {
    throw DimensionError("slice: range [" + std::to_string(offset) + ", " +
                         std::to_string(offset + n) + ") exceeds length " +
                         std::to_string(flat.size()));
  }
  const auto src = flat.data();
  std::vector<double> out(src.begin() + offset, src.begin() + offset + n);
  return Record(Tensor(std::move(shape), std::move(out)), {flat},
                [flat, offset](std::span<const double> g) {
                  auto& gf = flat.impl_->GradBuffer();
                  for (std::size_t i = 0; i < g.size(); ++i) gf[offset + i] += g[i];
                });
}

Tensor Tape::SliceRows(const Tensor& x, std::size_t begin, std::size_t count) {
  RequireRank(x, 2, "slice_rows");
  const std::size_t c = x.cols();
  if (count == 0 || begin + count > x.rows()) {
    throw DimensionError("slice_rows: rows [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") out of " +
                         ShapeString(x.shape()));
  }
  const auto src = x.data();
  std::vector<double> out(src.begin() + begin * c, src.begin() + (begin + count) * c);
  return Record(Tensor({count, c}, std::move(out)), {x},
                [x, begin, c](std::span<const double> g) {
                  auto& gx = x.impl_->GradBuffer();
                  for (std::size_t i = 0; i < g.size(); ++i) gx[begin * c + i] += g[i];
                });
}

Tensor Tape::GatherRows(const Tensor& x, std::span<const std::size_t> rows) {
  RequireRank(x, 2, "gather_rows");
  if (rows.empty()) throw DimensionError("gather_rows: no rows");
  const std::size_t c = x.cols();
  const auto src = x.data();
  std::vector<double> out;
  out.reserve(rows.size() * c);
  for (std::size_t r : rows) {
    if (r >= x.rows()) {
      throw DimensionError("gather_rows: row " + std::to_string(r) + " out of " +
                           ShapeString(x.shape()));
    }
    out.insert(out.end(), src.begin() + r * c, src.begin() + (r + 1) * c);
  }
  std::vector<std::size_t> index(rows.begin(), rows.end());
  return Record(Tensor({rows.size(), c}, std::move(out)), {x},
                [x, index, c](std::span<const double> g) {
                  auto& gx = x.impl_->GradBuffer();
                  for (std::size_t k = 0; k < index.size(); ++k) {
                    for (std::size_t j = 0; j < c; ++j) gx[index[k] * c + j] += g[k * c + j];
                  }
                });
}

Tensor Tape::ConcatRows(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no inputs");
  const std::size_t c = parts.front().cols();
  std::size_t rows = 0;
  std::vector<double> out;
  for (const Tensor& p : parts) {
    RequireRank(p, 2, "concat_rows");
    if (p.cols() != c) throw DimensionError("concat_rows: column counts differ");
    rows += p.rows();
    out.insert(out.end(), p.data().begin(), p.data().end());
  }
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  return Record(Tensor({rows, c}, std::move(out)), inputs,
                [inputs](std::span<const double> g) {
                  std::size_t offset = 0;
                  for (const Tensor& p : inputs) {
                    if (p.requires_grad()) {
                      auto& gp = p.impl_->GradBuffer();
                      for (std::size_t i = 0; i < p.size(); ++i) gp[i] += g[offset + i];
                    }
                    offset += p.size();
                  }
                });
}

Tensor Tape::RowCosine(const Tensor& a, const Tensor& b) {
  RequireRank(a, 2, "row_cosine");
  RequireSameShape(a, b, "row_cosine");
  const std::size_t r = a.rows(), d = a.cols();
  std::vector<double> na(r), nb(r), cos(r);
  for (std::size_t i = 0; i < r; ++i) {
    double dot = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double x = a[i * d + j], y = b[i * d + j];
      dot += x * y;
      aa += x * x;
      bb += y * y;
    }
    na[i] = std::sqrt(aa);
    nb[i] = std::sqrt(bb);
    if (na[i] == 0.0 || nb[i] == 0.0) {
      throw NumericError("row_cosine: zero-norm vector in row " + std::to_string(i));
    }
    cos[i] = dot / (na[i] * nb[i]);
  }
  CheckFinite(cos, "row_cosine");
  Tensor result = Tensor::Vector(cos);
  return Record(result, {a, b},
                [a, b, r, d, na, nb, cos](std::span<const double> g) {
                  for (std::size_t i = 0; i < r; ++i) {
                    const double inv = 1.0 / (na[i] * nb[i]);
                    if (a.requires_grad()) {
                      auto& ga = a.impl_->GradBuffer();
                      const double self = cos[i] / (na[i] * na[i]);
                      for (std::size_t j = 0; j < d; ++j) {
                        ga[i * d + j] += g[i] * (b[i * d + j] * inv - a[i * d + j] * self);
                      }
                    }
                    if (b.requires_grad()) {
                      auto& gb = b.impl_->GradBuffer();
                      const double self = cos[i] / (nb[i] * nb[i]);
                      for (std::size_t j = 0; j < d; ++j) {
                        gb[i * d + j] += g[i] * (a[i * d + j] * inv - b[i * d + j] * self);
                      }
                    }
                  }
                });
}

Tensor Tape::CrossEntropy(const Tensor& logits, std::span<const int> labels) {
  RequireRank(logits, 2, "cross_entropy");
  const std::size_t r = logits.rows(), c = logits.cols();
  if (labels.size() != r) {
    throw DimensionError("cross_entropy: " + std::to_string(labels.size()) +
                         " labels for " + std::to_string(r) + " rows");
  }
  std::vector<double> probs(r * c);
  double total = 0.0;
  for (std::size_t i = 0; i < r; ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= c) {
      throw ContractError("cross_entropy: label " + std::to_string(labels[i]) +
                          " outside [0, " + std::to_string(c) + ")");
    }
    const double* row = logits.data().data() + i * c;
    const double mx = *std::max_element(row, row + c);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += std::exp(row[j] - mx);
    const double log_z = std::log(z) + mx;
    for (std::size_t j = 0; j < c; ++j) probs[i * c + j] = std::exp(row[j] - log_z);
    total += log_z - row[labels[i]];
  }
  const double loss = total / static_cast<double>(r);
  CheckFinite({&loss, 1}, "cross_entropy");
  std::vector<int> owned(labels.begin(), labels.end());
  return Record(Tensor::Scalar(loss), {logits},
                [logits, probs = std::move(probs), owned = std::move(owned), r,
                 c](std::span<const double> g) {
                  auto& gl = logits.impl_->GradBuffer();
                  const double scale = g[0] / static_cast<double>(r);
                  for (std::size_t i = 0; i < r; ++i) {
                    for (std::size_t j = 0; j < c; ++j) {
                      double p = probs[i * c + j];
                      if (static_cast<int>(j) == owned[i]) p -= 1.0;
                      gl[i * c + j] += scale * p;
                    }
                  }
                });
}

void Tape::Backward(const Tensor& loss) {
  if (loss.size() != 1) {
    throw ContractError("backward: loss must be a single element, got shape " +
                        ShapeString(loss.shape()));
  }
  const double one = 1.0;
  Run(loss, {&one, 1});
}

void Tape::Backward(const Tensor& output, std::span<const double> upstream) {
  if (upstream.size() != output.size()) {
    throw DimensionError("backward: upstream gradient length " +
                         std::to_string(upstream.size()) + " vs output size " +
                         std::to_string(output.size()));
  }
  Run(output, upstream);
}

void Tape::Run(const Tensor& root, std::span<const double> seed) {
  if (nodes_.empty()) throw ContractError("backward: tape is empty");
  if (!root.requires_grad()) {
    throw ContractError("backward: output does not depend on a tracked tensor");
  }
  CheckFinite(seed, "backward seed");
  auto& g = root.impl_->GradBuffer();
  for (std::size_t i = 0; i < seed.size(); ++i) g[i] += seed[i];
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (!it->output.has_grad()) continue;
    it->rule(it->output.grad());
  }
  for (const Node& node : nodes_) {
    for (const Tensor& in : node.inputs) {
      if (in.has_grad()) CheckFinite(in.grad(), "backward");
    }
  }
  nodes_.clear();
}

double GradientCheck(const ScalarFunction& f, const Tensor& x, double step,
                     std::span<const std::size_t> coords) {
  if (!(step > 0.0)) throw ContractError("gradient_check: step must be positive");
  Tensor leaf(x.shape(), std::vector<double>(x.data().begin(), x.data().end()), true);
  std::vector<double> analytic(x.size(), 0.0);
  {
    Tape tape;
    Tensor y = f(tape, leaf);
    if (y.size() != 1) throw ContractError("gradient_check: f must be scalar-valued");
    CheckFinite(y.data(), "gradient_check");
    if (y.requires_grad()) {
      tape.Backward(y);
      if (leaf.has_grad()) {
        analytic.assign(leaf.grad().begin(), leaf.grad().end());
      }
    }
  }
  std::vector<std::size_t> all;
  if (coords.empty()) {
    all.resize(x.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    coords = all;
  }
  auto eval = [&](std::vector<double> values) {
    Tape tape;
    return f(tape, Tensor(x.shape(), std::move(values))).item();
  };
  double worst = 0.0;
  std::vector<double> probe(x.data().begin(), x.data().end());
  for (std::size_t i : coords) {
    if (i >= x.size()) throw ContractError("gradient_check: coordinate out of range");
    const double orig = probe[i];
    probe[i] = orig + step;
    const double up = eval(probe);
    probe[i] = orig - step;
    const double down = eval(probe);
    probe[i] = orig;
    const double fd = (up - down) / (2.0 * step);
    if (!std::isfinite(fd)) throw NumericError("gradient_check: non-finite difference");
    worst = std::max(worst, std::abs(analytic[i] - fd) / std::max(1.0, std::abs(fd)));
  }
  return worst;
}

}  // namespace tierfl
