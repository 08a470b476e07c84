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

// Command-line front end. Links only the C interface.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "tierfl/tierfl.h"

namespace {

// Prints the library's error JSON to stderr and maps the status to an exit
// code.
int Report(tierfl_status status) {
  std::cerr << tierfl_last_error() << "\n";
  return static_cast<int>(status);
}

int TakeString(tierfl_status status, char* text, std::ostream& out) {
  if (status != TIERFL_OK) return Report(status);
  out << text;
  tierfl_string_free(text);
  return 0;
}

bool ReadInput(const std::string& path, std::string& text) {
  if (path == "-") {
    std::stringstream buffer;
    buffer << std::cin.rdbuf();
    text = buffer.str();
    return true;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::stringstream buffer;
  buffer << in.rdbuf();
  text = buffer.str();
  return true;
}

std::string JsonString(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

int Run(const std::string& config_path) {
  tierfl_config* config = nullptr;
  tierfl_status status = tierfl_config_load(config_path.c_str(), &config);
  if (status != TIERFL_OK) return Report(status);
  char* dir = nullptr;
  status = tierfl_run_to_disk(config, &dir);
  tierfl_config_free(config);
  if (status != TIERFL_OK) return Report(status);
  std::cout << "{\"status\": \"ok\", \"output_dir\": " << JsonString(dir) << "}\n";
  tierfl_string_free(dir);
  return 0;
}

int Sweep(const std::string& spec_path, bool no_write) {
  char* csv = nullptr;
  const tierfl_status status = tierfl_sweep_file(spec_path.c_str(), no_write ? 0 : 1, &csv);
  return TakeString(status, csv, std::cout);
}

int Cost(const std::string& input_path) {
  std::string text;
  if (!ReadInput(input_path, text)) {
    std::cerr << "{\"status\": \"io\", \"message\": " << JsonString(input_path + ": cannot open")
              << ", \"path\": " << JsonString(input_path) << "}\n";
    return TIERFL_ERR_IO;
  }
  char* report = nullptr;
  const tierfl_status status = tierfl_cost(text.c_str(), &report);
  return TakeString(status, report, std::cout);
}

int Check(std::uint64_t seed) {
  char* report = nullptr;
  int pass = 0;
  const tierfl_status status = tierfl_check(seed, &report, &pass);
  const int code = TakeString(status, report, std::cout);
  if (code != 0) return code;
  return pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Split and hierarchical federated learning simulator"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run one experiment and write its artifacts");
  run->add_option("config", config_path, "Run configuration (JSON)")->required();

  std::string spec_path;
  bool no_write = false;
  auto* sweep = app.add_subcommand("sweep", "Run an ablation sweep, print one CSV row per point");
  sweep->add_option("spec", spec_path, "Sweep specification (JSON)")->required();
  sweep->add_flag("--no-write", no_write, "Only print the table");

  std::string cost_path;
  auto* cost = app.add_subcommand("cost", "Analytic communication cost of a configuration");
  cost->add_option("input", cost_path, "Cost-model input (JSON, '-' for stdin)")->required();

  std::uint64_t seed = 0;
  auto* check = app.add_subcommand("check", "Run the invariant self-test");
  check->add_option("--seed", seed, "Seed for the random instances");

  CLI11_PARSE(app, argc, argv);

  if (*run) return Run(config_path);
  if (*sweep) return Sweep(spec_path, no_write);
  if (*cost) return Cost(cost_path);
  if (*check) return Check(seed);
  return 0;
}
