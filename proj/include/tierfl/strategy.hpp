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

#ifndef TIERFL_STRATEGY_HPP_
#define TIERFL_STRATEGY_HPP_

#include <optional>
#include <string_view>

namespace tierfl {

enum class StrategyKind {
  kFedAvg,
  kFedSgd,
  kFedProx,
  kFedNova,
  kSplitFed,
  kHierFl,
  kHsfl,
  kSherl,
};

const char* StrategyName(StrategyKind kind);
std::optional<StrategyKind> ParseStrategy(std::string_view name);
bool IsFlat(StrategyKind kind);
// hsfl and sherl: three-tier split with edge aggregation.
bool IsTieredSplit(StrategyKind kind);

}  // namespace tierfl

#endif  // TIERFL_STRATEGY_HPP_
