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

#include "tierfl/error.hpp"

namespace tierfl {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimension: return "dimension";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kContract: return "contract";
    case ErrorCode::kNumeric: return "numeric";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

namespace {
std::string JoinIssues(const std::vector<FieldIssue>& issues) {
  std::string out = "invalid configuration:";
  for (std::size_t i = 0; i < issues.size(); ++i) {
    out += (i == 0 ? " [" : "; [") + issues[i].field + "] " + issues[i].message;
  }
  return out;
}
}  // namespace

ConfigError::ConfigError(std::vector<FieldIssue> issues)
    : Error(ErrorCode::kConfig, JoinIssues(issues)), issues_(std::move(issues)) {}

}  // namespace tierfl
