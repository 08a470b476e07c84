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

#ifndef TIERFL_ERROR_HPP_
#define TIERFL_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tierfl {

enum class ErrorCode {
  kDimension = 1,
  kConfig = 2,
  kContract = 3,
  kNumeric = 4,
  kIo = 5,
};

const char* ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& message)
      : Error(ErrorCode::kDimension, message) {}
};

class ContractError : public Error {
 public:
  explicit ContractError(const std::string& message)
      : Error(ErrorCode::kContract, message) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& message)
      : Error(ErrorCode::kNumeric, message) {}
};

class IoError : public Error {
 public:
  IoError(const std::string& path, const std::string& message)
      : Error(ErrorCode::kIo, path + ": " + message), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

// One offending field in a configuration document, addressed by its dotted
// path (e.g. "schedule.t1").
struct FieldIssue {
  std::string field;
  std::string message;
};

// Configuration errors are collected and reported together.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<FieldIssue> issues);
  ConfigError(std::string field, std::string message)
      : ConfigError(std::vector<FieldIssue>{{std::move(field), std::move(message)}}) {}
  const std::vector<FieldIssue>& issues() const { return issues_; }

 private:
  std::vector<FieldIssue> issues_;
};

}  // namespace tierfl

#endif  // TIERFL_ERROR_HPP_
