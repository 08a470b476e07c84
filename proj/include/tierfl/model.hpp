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

#ifndef TIERFL_MODEL_HPP_
#define TIERFL_MODEL_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tierfl/tensor.hpp"

namespace tierfl {

enum class Activation { kNone, kRelu };

struct LayerSpec {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  Activation activation = Activation::kNone;

  std::size_t ParamCount() const { return in_dim * out_dim + out_dim; }
  bool operator==(const LayerSpec&) const = default;
};

// Throws ConfigError unless every dimension is positive and consecutive layers
// chain (out_dim of layer i == in_dim of layer i + 1).
void ValidateChain(std::span<const LayerSpec> layers);

// Where a layer's parameters live inside the flat vector. Weights are stored
// row-major as [in_dim x out_dim], followed by the bias.
struct LayerSlot {
  LayerSpec spec;
  std::size_t weight_offset = 0;
  std::size_t bias_offset = 0;
};

struct SegmentLayout {
  std::vector<LayerSlot> slots;
  std::size_t total = 0;

  static SegmentLayout For(std::span<const LayerSpec> layers);
  std::vector<LayerSpec> Specs() const;
  bool empty() const { return slots.empty(); }
  bool operator==(const SegmentLayout& other) const;
};

// Parameters of one model segment, flattened in declaration order.
struct SegmentParams {
  std::vector<double> flat;
  SegmentLayout layout;

  std::size_t size() const { return flat.size(); }
};

struct LayerWeights {
  Tensor weight;  // [in x out]
  Tensor bias;    // [out]
};

std::vector<LayerWeights> Unflatten(const SegmentParams& params);
SegmentParams Flatten(std::span<const LayerWeights> layers,
                      std::span<const LayerSpec> specs);

inline constexpr double kBiasInit = 0.01;

// Weights drawn from uniform(-a, a), a = sqrt(6 / (in + out)); biases kBiasInit.
SegmentParams BuildSegment(std::span<const LayerSpec> layers, std::uint64_t seed);

// Dense layers applied in order. `flat` holds the segment parameters (a
// requires-grad leaf when training, plain values for inference).
Tensor ForwardSegment(Tape& tape, const SegmentLayout& layout, const Tensor& flat,
                      const Tensor& x);
// Inference without gradient tracking.
Tensor ForwardSegment(const SegmentParams& params, const Tensor& x);

std::size_t ParamBytes(const SegmentParams& params, std::size_t bytes_per_scalar);

// Assignment of layers to tiers. Flat strategies keep every layer in `client`.
struct SplitPlan {
  std::vector<LayerSpec> client;
  std::vector<LayerSpec> edge;
  std::vector<LayerSpec> cloud;

  std::vector<LayerSpec> Joined() const;
};

// client = [0, cut1), edge = [cut1, cut2), cloud = [cut2, end).
// Requires 0 < cut1 < cut2 < layers.size().
SplitPlan RoleAwareSplit(std::span<const LayerSpec> layers, std::size_t cut1,
                         std::size_t cut2);

// Cuts the flat parameters of the full model along a plan's boundaries.
struct PlanParams {
  SegmentParams client;
  SegmentParams edge;
  SegmentParams cloud;
};
PlanParams SplitParams(const SegmentParams& full, const SplitPlan& plan);
SegmentParams JoinParams(const PlanParams& parts);

// Input-to-output MLP dims with ReLU on every hidden layer except the last one
// before the head, which stays linear so representations are never clamped to
// the zero vector.
std::vector<LayerSpec> MlpLayers(std::size_t input_dim, std::span<const std::size_t> hidden,
                                 std::size_t classes);

}  // namespace tierfl

#endif  // TIERFL_MODEL_HPP_
