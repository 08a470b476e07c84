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

#ifndef TIERFL_SRC_JSON_SECTION_HPP_
#define TIERFL_SRC_JSON_SECTION_HPP_

#include <concepts>
#include <climits>
#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "tierfl/error.hpp"

namespace tierfl::internal {

using Json = nlohmann::ordered_json;

// Walks one JSON object, reading known keys and recording every problem with
// its dotted path. Keys never read are reported as unknown by Finish().
class Section {
 public:
  Section(const Json* node, std::string path, std::vector<FieldIssue>& issues)
      : node_(node), path_(std::move(path)), issues_(issues) {
    if (node_ != nullptr && !node_->is_object()) {
      Issue("", "must be an object");
      node_ = nullptr;
    }
  }

  Section Child(const char* key) {
    known_.insert(key);
    const Json* child = Find(key);
    return Section(child, Path(key), issues_);
  }

  // Marks `key` as known and returns its value for custom handling.
  const Json* Raw(const char* key) { return Take(key); }
  void Issue(const std::string& key, std::string message) {
    issues_.push_back({Path(key), std::move(message)});
  }

  void Read(const char* key, double& out) {
    if (const Json* v = Take(key)) {
      if (v->is_number()) {
        out = v->get<double>();
      } else {
        Issue(key, "must be a number");
      }
    }
  }

  void Read(const char* key, bool& out) {
    if (const Json* v = Take(key)) {
      if (v->is_boolean()) {
        out = v->get<bool>();
      } else {
        Issue(key, "must be true or false");
      }
    }
  }

  void Read(const char* key, std::string& out) {
    if (const Json* v = Take(key)) {
      if (v->is_string()) {
        out = v->get<std::string>();
      } else {
        Issue(key, "must be a string");
      }
    }
  }

  void Read(const char* key, int& out) {
    if (const Json* v = Take(key)) {
      if (v->is_number_integer() && v->get<std::int64_t>() >= INT_MIN &&
          v->get<std::int64_t>() <= INT_MAX) {
        out = static_cast<int>(v->get<std::int64_t>());
      } else {
        Issue(key, "must be an integer");
      }
    }
  }

  template <std::unsigned_integral U>
  void Read(const char* key, U& out) {
    if (const Json* v = Take(key)) ReadUnsigned(*v, key, out);
  }

  void Read(const char* key, std::vector<std::size_t>& out) {
    if (const Json* v = Take(key)) {
      if (!v->is_array()) {
        Issue(key, "must be an array of positive integers");
        return;
      }
      std::vector<std::size_t> values;
      for (const Json& item : *v) {
        if (!item.is_number_unsigned() || item.get<std::uint64_t>() == 0) {
          Issue(key, "must be an array of positive integers");
          return;
        }
        values.push_back(item.get<std::size_t>());
      }
      out = std::move(values);
    }
  }

  // Reads a string key and maps it through `parse`; `expected` lists the
  // accepted spellings for the error message.
  template <typename T, typename Parse>
  void ReadEnum(const char* key, T& out, Parse parse, const char* expected) {
    std::string name;
    if (Find(key) == nullptr) {
      known_.insert(key);
      return;
    }
    Read(key, name);
    if (name.empty() && !Find(key)->is_string()) return;
    if (auto parsed = parse(name)) {
      out = *parsed;
    } else {
      Issue(key, "unknown value \"" + name + "\", expected one of " + expected);
    }
  }

  void Finish() {
    if (node_ == nullptr) return;
    for (const auto& [key, value] : node_->items()) {
      if (!known_.count(key)) Issue(key, "unknown key");
    }
  }

  std::string Path(const std::string& key) const {
    if (key.empty()) return path_;
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  const Json* Find(const char* key) const {
    if (node_ == nullptr) return nullptr;
    auto it = node_->find(key);
    return it == node_->end() ? nullptr : &*it;
  }
  const Json* Take(const char* key) {
    known_.insert(key);
    return Find(key);
  }
  template <typename U>
  void ReadUnsigned(const Json& v, const char* key, U& out) {
    if (v.is_number_unsigned()) {
      out = static_cast<U>(v.get<std::uint64_t>());
    } else if (v.is_number_integer()) {
      Issue(key, "must be non-negative");
    } else {
      Issue(key, "must be a non-negative integer");
    }
  }

  const Json* node_;
  std::string path_;
  std::vector<FieldIssue>& issues_;
  std::set<std::string> known_;
};

}  // namespace tierfl::internal

#endif  // TIERFL_SRC_JSON_SECTION_HPP_
