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

#include "tierfl/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tierfl/error.hpp"
#include "tierfl/rng.hpp"

namespace tierfl {

void ValidateChain(std::span<const LayerSpec> layers) {
  std::vector<FieldIssue> issues;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].in_dim == 0 || layers[i].out_dim == 0) {
      issues.push_back({"layers[" + std::to_string(i) + "]", "dimensions must be positive"});
    }
    if (i > 0 && layers[i - 1].out_dim != layers[i].in_dim) {
      issues.push_back({"layers[" + std::to_string(i) + "]",
                        "in_dim " + std::to_string(layers[i].in_dim) +
                            " does not match previous out_dim " +
                            std::to_string(layers[i - 1].out_dim)});
    }
  }
  if (!issues.empty()) throw ConfigError(std::move(issues));
}

SegmentLayout SegmentLayout::For(std::span<const LayerSpec> layers) {
  ValidateChain(layers);
  SegmentLayout layout;
  for (const LayerSpec& spec : layers) {
    LayerSlot slot{spec, layout.total, layout.total + spec.in_dim * spec.out_dim};
    layout.total += spec.ParamCount();
    layout.slots.push_back(slot);
  }
  return layout;
}

std::vector<LayerSpec> SegmentLayout::Specs() const {
  std::vector<LayerSpec> out;
  for (const auto& s : slots) out.push_back(s.spec);
  return out;
}

bool SegmentLayout::operator==(const SegmentLayout& other) const {
  if (total != other.total || slots.size() != other.slots.size()) return false;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (!(slots[i].spec == other.slots[i].spec)) return false;
  }
  return true;
}

std::vector<LayerWeights> Unflatten(const SegmentParams& params) {
  if (params.flat.size() != params.layout.total) {
    throw ContractError("unflatten: flat length does not match layout");
  }
  std::vector<LayerWeights> out;
  for (const LayerSlot& slot : params.layout.slots) {
    const auto& s = slot.spec;
    auto w_begin = params.flat.begin() + static_cast<std::ptrdiff_t>(slot.weight_offset);
    auto b_begin = params.flat.begin() + static_cast<std::ptrdiff_t>(slot.bias_offset);
    out.push_back(LayerWeights{
        Tensor::Matrix(s.in_dim, s.out_dim,
                       std::vector<double>(w_begin, w_begin + s.in_dim * s.out_dim)),
        Tensor::Vector(std::vector<double>(b_begin, b_begin + s.out_dim))});
  }
  return out;
}

SegmentParams Flatten(std::span<const LayerWeights> layers,
                      std::span<const LayerSpec> specs) {
  if (layers.size() != specs.size()) {
    throw ContractError("flatten: layer count does not match specs");
  }
  SegmentParams params{{}, SegmentLayout::For(specs)};
  params.flat.reserve(params.layout.total);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& s = specs[i];
    if (layers[i].weight.shape() != Shape{s.in_dim, s.out_dim} ||
        layers[i].bias.shape() != Shape{s.out_dim}) {
      throw DimensionError("flatten: layer " + std::to_string(i) + " shape mismatch");
    }
    params.flat.insert(params.flat.end(), layers[i].weight.data().begin(),
                       layers[i].weight.data().end());
    params.flat.insert(params.flat.end(), layers[i].bias.data().begin(),
                       layers[i].bias.data().end());
  }
  return params;
}

SegmentParams BuildSegment(std::span<const LayerSpec> layers, std::uint64_t seed) {
  SegmentParams params{{}, SegmentLayout::For(layers)};
  params.flat.assign(params.layout.total, 0.0);
  Rng rng(seed);
  for (const LayerSlot& slot : params.layout.slots) {
    const double a =
        std::sqrt(6.0 / static_cast<double>(slot.spec.in_dim + slot.spec.out_dim));
    for (std::size_t i = 0; i < slot.spec.in_dim * slot.spec.out_dim; ++i) {
      params.flat[slot.weight_offset + i] = rng.Uniform(-a, a);
    }
    // A small positive bias keeps a fully dead ReLU layer from producing an
    // all-zero representation, which the cosine measure rejects.
    std::fill_n(params.flat.begin() + static_cast<std::ptrdiff_t>(slot.bias_offset),
                slot.spec.out_dim, kBiasInit);
  }
  return params;
}

Tensor ForwardSegment(Tape& tape, const SegmentLayout& layout, const Tensor& flat,
                      const Tensor& x) {
  if (flat.size() != layout.total) {
    throw DimensionError("forward_segment: parameter vector has " +
                         std::to_string(flat.size()) + " values, layout expects " +
                         std::to_string(layout.total));
  }
  if (layout.empty()) return x;
  if (x.rank() != 2 || x.cols() != layout.slots.front().spec.in_dim) {
    throw DimensionError("forward_segment: input " + ShapeString(x.shape()) +
                         " does not match in_dim " +
                         std::to_string(layout.slots.front().spec.in_dim));
  }
  Tensor h = x;
  for (const LayerSlot& slot : layout.slots) {
    const auto& s = slot.spec;
    Tensor w = tape.Slice(flat, slot.weight_offset, {s.in_dim, s.out_dim});
    Tensor b = tape.Slice(flat, slot.bias_offset, {s.out_dim});
    h = tape.AddRowBias(tape.MatMul(h, w), b);
    if (s.activation == Activation::kRelu) h = tape.Relu(h);
  }
  return h;
}

Tensor ForwardSegment(const SegmentParams& params, const Tensor& x) {
  if (params.layout.empty()) return x;
  Tape tape;
  return ForwardSegment(tape, params.layout, Tensor::Vector(params.flat), x);
}

std::size_t ParamBytes(const SegmentParams& params, std::size_t bytes_per_scalar) {
  if (bytes_per_scalar != 4 && bytes_per_scalar != 8) {
    throw ContractError("param_bytes: bytes_per_scalar must be 4 or 8");
  }
  return params.flat.size() * bytes_per_scalar;
}

std::vector<LayerSpec> SplitPlan::Joined() const {
  std::vector<LayerSpec> out(client);
  out.insert(out.end(), edge.begin(), edge.end());
  out.insert(out.end(), cloud.begin(), cloud.end());
  return out;
}

SplitPlan RoleAwareSplit(std::span<const LayerSpec> layers, std::size_t cut1,
                         std::size_t cut2) {
  if (!(0 < cut1 && cut1 < cut2 && cut2 < layers.size())) {
    throw ConfigError("model.cuts", "need 0 < cut1 < cut2 < " +
                                        std::to_string(layers.size()) + ", got cut1=" +
                                        std::to_string(cut1) +
                                        ", cut2=" + std::to_string(cut2));
  }
  ValidateChain(layers);
  SplitPlan plan;
  plan.client.assign(layers.begin(), layers.begin() + static_cast<std::ptrdiff_t>(cut1));
  plan.edge.assign(layers.begin() + static_cast<std::ptrdiff_t>(cut1),
                   layers.begin() + static_cast<std::ptrdiff_t>(cut2));
  plan.cloud.assign(layers.begin() + static_cast<std::ptrdiff_t>(cut2), layers.end());
  return plan;
}

PlanParams SplitParams(const SegmentParams& full, const SplitPlan& plan) {
  if (!(full.layout == SegmentLayout::For(plan.Joined()))) {
    throw ContractError("split_params: layout does not match plan");
  }
  auto take = [&](const std::vector<LayerSpec>& specs, std::size_t& offset) {
    SegmentParams seg{{}, SegmentLayout::For(specs)};
    auto begin = full.flat.begin() + static_cast<std::ptrdiff_t>(offset);
    seg.flat.assign(begin, begin + static_cast<std::ptrdiff_t>(seg.layout.total));
    offset += seg.layout.total;
    return seg;
  };
  std::size_t offset = 0;
  PlanParams parts;
  parts.client = take(plan.client, offset);
  parts.edge = take(plan.edge, offset);
  parts.cloud = take(plan.cloud, offset);
  return parts;
}

SegmentParams JoinParams(const PlanParams& parts) {
  std::vector<LayerSpec> specs = parts.client.layout.Specs();
  for (const auto* p : {&parts.edge, &parts.cloud}) {
    auto s = p->layout.Specs();
    specs.insert(specs.end(), s.begin(), s.end());
  }
  SegmentParams full{{}, SegmentLayout::For(specs)};
  for (const auto* p : {&parts.client, &parts.edge, &parts.cloud}) {
    full.flat.insert(full.flat.end(), p->flat.begin(), p->flat.end());
  }
  return full;
}

std::vector<LayerSpec> MlpLayers(std::size_t input_dim, std::span<const std::size_t> hidden,
                                 std::size_t classes) {
  std::vector<LayerSpec> layers;
  std::size_t in = input_dim;
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    const bool last_hidden = i + 1 == hidden.size();
    layers.push_back({in, hidden[i], last_hidden ? Activation::kNone : Activation::kRelu});
    in = hidden[i];
  }
  layers.push_back({in, classes, Activation::kNone});
  return layers;
}

}  // namespace tierfl
