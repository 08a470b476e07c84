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

#include "tierfl/tierfl.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <new>
#include <string>

#include "json.hpp"
#include "tierfl/checks.hpp"
#include "tierfl/config.hpp"
#include "tierfl/error.hpp"
#include "tierfl/runner.hpp"

struct tierfl_config {
  tierfl::RunConfig config;
};

struct tierfl_result {
  tierfl::RunConfig config;
  tierfl::ExperimentResult result;
  tierfl::RunArtifacts artifacts;
};

namespace {

using Json = nlohmann::ordered_json;

thread_local std::string last_error;

char* Duplicate(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

tierfl_status Fail(tierfl_status status, const std::string& message, Json extra = Json::object()) {
  Json j;
  j["status"] = tierfl_status_name(status);
  j["message"] = message;
  for (auto& [k, v] : extra.items()) j[k] = v;
  last_error = j.dump();
  return status;
}

tierfl_status FromCode(tierfl::ErrorCode code) {
  switch (code) {
    case tierfl::ErrorCode::kDimension:
      return TIERFL_ERR_DIMENSION;
    case tierfl::ErrorCode::kConfig:
      return TIERFL_ERR_CONFIG;
    case tierfl::ErrorCode::kContract:
      return TIERFL_ERR_CONTRACT;
    case tierfl::ErrorCode::kNumeric:
      return TIERFL_ERR_NUMERIC;
    case tierfl::ErrorCode::kIo:
      return TIERFL_ERR_IO;
  }
  return TIERFL_ERR_INTERNAL;
}

// Runs `body`, translating exceptions into status codes and error JSON.
template <typename Body>
tierfl_status Guard(Body&& body) {
  last_error.clear();
  try {
    body();
    return TIERFL_OK;
  } catch (const tierfl::ConfigError& e) {
    Json issues = Json::array();
    for (const auto& i : e.issues()) issues.push_back({{"field", i.field}, {"message", i.message}});
    return Fail(TIERFL_ERR_CONFIG, e.what(), {{"issues", issues}});
  } catch (const tierfl::IoError& e) {
    return Fail(TIERFL_ERR_IO, e.what(), {{"path", e.path()}});
  } catch (const tierfl::Error& e) {
    return Fail(FromCode(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return Fail(TIERFL_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return Fail(TIERFL_ERR_INTERNAL, e.what());
  }
}

bool Missing(const void* p, const char* name, tierfl_status* status) {
  if (p != nullptr) return false;
  *status = Fail(TIERFL_ERR_ARGUMENT, std::string(name) + " must not be NULL");
  return true;
}

}  // namespace

extern "C" {

const char* tierfl_version(void) { return "0.1.0"; }

const char* tierfl_status_name(tierfl_status status) {
  switch (status) {
    case TIERFL_OK:
      return "ok";
    case TIERFL_ERR_DIMENSION:
      return "dimension";
    case TIERFL_ERR_CONFIG:
      return "config";
    case TIERFL_ERR_CONTRACT:
      return "contract";
    case TIERFL_ERR_NUMERIC:
      return "numeric";
    case TIERFL_ERR_IO:
      return "io";
    case TIERFL_ERR_ARGUMENT:
      return "argument";
    case TIERFL_ERR_INTERNAL:
      return "internal";
  }
  return "unknown";
}

const char* tierfl_last_error(void) { return last_error.c_str(); }

void tierfl_string_free(char* s) { std::free(s); }

tierfl_status tierfl_config_parse(const char* json, const char* base_dir, tierfl_config** out) {
  tierfl_status status;
  if (Missing(json, "json", &status) || Missing(out, "out", &status)) return status;
  return Guard([&] {
    *out = new tierfl_config{tierfl::ParseConfig(json, base_dir ? base_dir : ".")};
  });
}

tierfl_status tierfl_config_load(const char* path, tierfl_config** out) {
  tierfl_status status;
  if (Missing(path, "path", &status) || Missing(out, "out", &status)) return status;
  return Guard([&] { *out = new tierfl_config{tierfl::LoadConfig(path)}; });
}

tierfl_status tierfl_config_to_json(const tierfl_config* config, char** out) {
  tierfl_status status;
  if (Missing(config, "config", &status) || Missing(out, "out", &status)) return status;
  return Guard([&] { *out = Duplicate(tierfl::ConfigToJson(config->config)); });
}

void tierfl_config_free(tierfl_config* config) { delete config; }

tierfl_status tierfl_run(const tierfl_config* config, tierfl_result** out) {
  tierfl_status status;
  if (Missing(config, "config", &status) || Missing(out, "out", &status)) return status;
  return Guard([&] {
    auto* r = new tierfl_result{config->config, {}, {}};
    try {
      r->result = tierfl::RunExperiment(tierfl::BuildExperiment(r->config));
      r->artifacts = tierfl::RenderArtifacts(r->config, r->result);
    } catch (...) {
      delete r;
      throw;
    }
    *out = r;
  });
}

tierfl_status tierfl_result_artifact(const tierfl_result* result, const char* name, char** out) {
  tierfl_status status;
  if (Missing(result, "result", &status) || Missing(name, "name", &status) ||
      Missing(out, "out", &status)) {
    return status;
  }
  const std::string n(name);
  const tierfl::RunArtifacts& a = result->artifacts;
  const std::string* text = n == "metrics.csv"      ? &a.metrics_csv
                            : n == "ledger.csv"     ? &a.ledger_csv
                            : n == "summary.json"   ? &a.summary_json
                            : n == "embeddings.csv" ? &a.embeddings_csv
                                                    : nullptr;
  if (text == nullptr) return Fail(TIERFL_ERR_ARGUMENT, "unknown artifact \"" + n + "\"");
  return Guard([&] { *out = Duplicate(*text); });
}

tierfl_status tierfl_result_write(const tierfl_result* result, const char* dir) {
  tierfl_status status;
  if (Missing(result, "result", &status) || Missing(dir, "dir", &status)) return status;
  return Guard([&] { tierfl::WriteArtifacts(dir, result->artifacts); });
}

int tierfl_result_rounds(const tierfl_result* result) {
  return result ? static_cast<int>(result->result.metrics.size()) : 0;
}

uint64_t tierfl_result_total_bytes(const tierfl_result* result) {
  return result ? result->result.ledger.total_bytes() : 0;
}

void tierfl_result_free(tierfl_result* result) { delete result; }

tierfl_status tierfl_run_to_disk(const tierfl_config* config, char** out_dir) {
  tierfl_status status;
  if (Missing(config, "config", &status)) return status;
  return Guard([&] {
    const tierfl::RunReport report = tierfl::RunToDisk(config->config);
    if (out_dir != nullptr) *out_dir = Duplicate(report.dir.string());
  });
}

static void SweepImpl(const tierfl::SweepSpec& spec, int write_outputs, char** out_csv) {
  const auto rows = tierfl::RunSweep(spec, write_outputs != 0);
  const std::string csv = tierfl::SweepCsv(rows);
  if (write_outputs != 0) {
    const auto dir = tierfl::ResolveOutputDir(spec.output_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw tierfl::IoError(dir.string(), "cannot create directory: " + ec.message());
    const std::string path = (dir / "sweep.csv").string();
    std::ofstream out(path, std::ios::binary);
    out << csv;
    out.close();
    if (!out) throw tierfl::IoError(path, "cannot write sweep table");
  }
  if (out_csv != nullptr) *out_csv = Duplicate(csv);
}

tierfl_status tierfl_sweep_file(const char* path, int write_outputs, char** out_csv) {
  tierfl_status status;
  if (Missing(path, "path", &status)) return status;
  return Guard([&] { SweepImpl(tierfl::LoadSweep(path), write_outputs, out_csv); });
}

tierfl_status tierfl_sweep(const char* spec_json, const char* base_dir, int write_outputs,
                           char** out_csv) {
  tierfl_status status;
  if (Missing(spec_json, "spec_json", &status)) return status;
  return Guard([&] {
    SweepImpl(tierfl::ParseSweep(spec_json, base_dir ? base_dir : "."), write_outputs, out_csv);
  });
}

tierfl_status tierfl_cost(const char* input_json, char** out_json) {
  tierfl_status status;
  if (Missing(input_json, "input_json", &status) || Missing(out_json, "out_json", &status)) {
    return status;
  }
  return Guard([&] { *out_json = Duplicate(tierfl::CostReport(input_json)); });
}

tierfl_status tierfl_check(uint64_t seed, char** out_json, int* all_pass) {
  tierfl_status status;
  if (Missing(out_json, "out_json", &status)) return status;
  return Guard([&] {
    bool pass = true;
    Json checks = Json::array();
    for (const tierfl::CheckResult& r : tierfl::RunInvariantChecks(seed)) {
      pass = pass && r.pass;
      checks.push_back({{"name", r.name}, {"pass", r.pass}, {"detail", r.detail}});
    }
    Json j;
    j["seed"] = seed;
    j["pass"] = pass;
    j["checks"] = checks;
    *out_json = Duplicate(j.dump(2) + "\n");
    if (all_pass != nullptr) *all_pass = pass ? 1 : 0;
  });
}

}  // extern "C"
