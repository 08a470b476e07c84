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

#include <cstring>
#include <string>

#include <gtest/gtest.h>

#include "json.hpp"

namespace {

using nlohmann::json;

const char* kConfig = R"({
  "seed": 2,
  "strategy": {"kind": "hsfl", "batch_size": 8},
  "topology": {"n_clients": 4, "n_edges": 2},
  "schedule": {"rounds": 3, "t1": 1, "t2": 2, "sample_rate": 1.0},
  "model": {"hidden": [8, 8, 6, 6]},
  "data": {"classes": 3, "dim": 5, "train_per_class": 8, "test_per_class": 4,
           "partition": "iid"},
  "eval": {"silhouette": false}
})";

std::string Take(char* s) {
  std::string out = s == nullptr ? "" : s;
  tierfl_string_free(s);
  return out;
}

TEST(CApi, VersionAndStatusNames) {
  EXPECT_STREQ(tierfl_version(), "0.1.0");
  EXPECT_STREQ(tierfl_status_name(TIERFL_OK), "ok");
  EXPECT_STREQ(tierfl_status_name(TIERFL_ERR_CONFIG), "config");
}

TEST(CApi, RunInMemory) {
  tierfl_config* config = nullptr;
  ASSERT_EQ(tierfl_config_parse(kConfig, nullptr, &config), TIERFL_OK);
  EXPECT_STREQ(tierfl_last_error(), "");
  tierfl_result* result = nullptr;
  ASSERT_EQ(tierfl_run(config, &result), TIERFL_OK);
  EXPECT_EQ(tierfl_result_rounds(result), 3);
  EXPECT_GT(tierfl_result_total_bytes(result), 0u);

  char* metrics = nullptr;
  ASSERT_EQ(tierfl_result_artifact(result, "metrics.csv", &metrics), TIERFL_OK);
  EXPECT_EQ(Take(metrics).rfind("round,loss,", 0), 0u);
  char* summary = nullptr;
  ASSERT_EQ(tierfl_result_artifact(result, "summary.json", &summary), TIERFL_OK);
  const json s = json::parse(Take(summary));
  EXPECT_EQ(s["strategy"], "hsfl");
  EXPECT_EQ(s["ledger_bytes"]["total"].get<std::uint64_t>(), tierfl_result_total_bytes(result));

  char* bogus = nullptr;
  EXPECT_EQ(tierfl_result_artifact(result, "nope.txt", &bogus), TIERFL_ERR_ARGUMENT);
  EXPECT_EQ(bogus, nullptr);

  tierfl_result_free(result);
  tierfl_config_free(config);
}

TEST(CApi, ConfigErrorsAreStructured) {
  tierfl_config* config = nullptr;
  EXPECT_EQ(tierfl_config_parse(R"({"strategy": {"margin": 3.0}, "x": 1})", nullptr, &config),
            TIERFL_ERR_CONFIG);
  EXPECT_EQ(config, nullptr);
  const json err = json::parse(tierfl_last_error());
  EXPECT_EQ(err["status"], "config");
  ASSERT_EQ(err["issues"].size(), 2u);
  bool saw_margin = false;
  for (const auto& issue : err["issues"]) {
    if (issue["field"] == "strategy.margin") {
      saw_margin = issue["message"].get<std::string>().find("[0,2]") != std::string::npos;
    }
  }
  EXPECT_TRUE(saw_margin);
}

TEST(CApi, NullArgumentsAreRejected) {
  EXPECT_EQ(tierfl_config_parse(nullptr, nullptr, nullptr), TIERFL_ERR_ARGUMENT);
  EXPECT_EQ(tierfl_run(nullptr, nullptr), TIERFL_ERR_ARGUMENT);
  EXPECT_EQ(tierfl_cost(nullptr, nullptr), TIERFL_ERR_ARGUMENT);
  EXPECT_EQ(tierfl_result_rounds(nullptr), 0);
  tierfl_config_free(nullptr);
  tierfl_result_free(nullptr);
  tierfl_string_free(nullptr);
}

TEST(CApi, MissingFileIsAnIoError) {
  tierfl_config* config = nullptr;
  EXPECT_EQ(tierfl_config_load("/nonexistent/run.json", &config), TIERFL_ERR_IO);
  const json err = json::parse(tierfl_last_error());
  EXPECT_EQ(err["path"], "/nonexistent/run.json");
}

TEST(CApi, ConfigJsonRoundTrip) {
  tierfl_config* config = nullptr;
  ASSERT_EQ(tierfl_config_parse(kConfig, ".", &config), TIERFL_OK);
  char* text = nullptr;
  ASSERT_EQ(tierfl_config_to_json(config, &text), TIERFL_OK);
  const std::string canonical = Take(text);
  tierfl_config* again = nullptr;
  ASSERT_EQ(tierfl_config_parse(canonical.c_str(), ".", &again), TIERFL_OK);
  ASSERT_EQ(tierfl_config_to_json(again, &text), TIERFL_OK);
  EXPECT_EQ(Take(text), canonical);
  tierfl_config_free(again);
  tierfl_config_free(config);
}

TEST(CApi, CostSweepAndCheck) {
  char* out = nullptr;
  ASSERT_EQ(tierfl_cost(R"({"strategy": "sherl",
                             "observed_gb": {"client_smashed_up": 1.5}})",
                        &out),
            TIERFL_OK);
  EXPECT_NEAR(json::parse(Take(out))["total_gb"].get<double>(), 1.5, 1e-12);

  const std::string spec =
      std::string(R"({"base": )") + kConfig + R"(, "axis": "margin", "values": [0.2, 1.5]})";
  ASSERT_EQ(tierfl_sweep(spec.c_str(), nullptr, 0, &out), TIERFL_OK);
  const std::string csv = Take(out);
  EXPECT_NE(csv.find("m0.2,"), std::string::npos);
  EXPECT_NE(csv.find("m1.5,"), std::string::npos);

  int all_pass = 0;
  ASSERT_EQ(tierfl_check(1, &out, &all_pass), TIERFL_OK);
  const json checks = json::parse(Take(out));
  EXPECT_EQ(all_pass, 1) << checks.dump(2);
}

}  // namespace
