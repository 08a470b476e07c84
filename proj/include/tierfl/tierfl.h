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

/* C interface to the tierfl simulator. Every call returns a status code; on
 * failure tierfl_last_error() describes the problem as a JSON object. Strings
 * handed out by the library are released with tierfl_string_free. */

#ifndef TIERFL_TIERFL_H_
#define TIERFL_TIERFL_H_

#include <stdint.h>

#if defined(_WIN32)
#define TIERFL_API __declspec(dllexport)
#else
#define TIERFL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tierfl_status {
  TIERFL_OK = 0,
  TIERFL_ERR_DIMENSION = 1,
  TIERFL_ERR_CONFIG = 2,
  TIERFL_ERR_CONTRACT = 3,
  TIERFL_ERR_NUMERIC = 4,
  TIERFL_ERR_IO = 5,
  TIERFL_ERR_ARGUMENT = 6,
  TIERFL_ERR_INTERNAL = 7
} tierfl_status;

typedef struct tierfl_config tierfl_config;
typedef struct tierfl_result tierfl_result;

TIERFL_API const char* tierfl_version(void);
TIERFL_API const char* tierfl_status_name(tierfl_status status);

/* JSON describing the last failure on the calling thread:
 * {"status": ..., "message": ..., "issues": [{"field", "message"}], "path": ...}.
 * Empty string when the last call succeeded. Owned by the library. */
TIERFL_API const char* tierfl_last_error(void);
TIERFL_API void tierfl_string_free(char* s);

/* Relative csv paths in `json` resolve against `base_dir` (NULL means "."). */
TIERFL_API tierfl_status tierfl_config_parse(const char* json, const char* base_dir,
                                             tierfl_config** out);
TIERFL_API tierfl_status tierfl_config_load(const char* path, tierfl_config** out);
TIERFL_API tierfl_status tierfl_config_to_json(const tierfl_config* config, char** out);
TIERFL_API void tierfl_config_free(tierfl_config* config);

/* Runs the experiment in memory. */
TIERFL_API tierfl_status tierfl_run(const tierfl_config* config, tierfl_result** out);
/* `name` is one of "metrics.csv", "ledger.csv", "summary.json",
 * "embeddings.csv". */
TIERFL_API tierfl_status tierfl_result_artifact(const tierfl_result* result, const char* name,
                                                char** out);
TIERFL_API tierfl_status tierfl_result_write(const tierfl_result* result, const char* dir);
TIERFL_API int tierfl_result_rounds(const tierfl_result* result);
TIERFL_API uint64_t tierfl_result_total_bytes(const tierfl_result* result);
TIERFL_API void tierfl_result_free(tierfl_result* result);

/* Runs and writes artifacts to the configured output directory (relocated
 * under $TIERFL_OUTPUT_ROOT when relative). `out_dir` may be NULL. */
TIERFL_API tierfl_status tierfl_run_to_disk(const tierfl_config* config, char** out_dir);

/* Sweep from a spec file. With `write_outputs` every point's artifacts and
 * sweep.csv are written below the sweep output directory. Failed points are
 * rows with status "error"; the call itself still succeeds. */
TIERFL_API tierfl_status tierfl_sweep_file(const char* path, int write_outputs, char** out_csv);
TIERFL_API tierfl_status tierfl_sweep(const char* spec_json, const char* base_dir,
                                      int write_outputs, char** out_csv);

/* Analytic communication cost for a JSON cost-model input. */
TIERFL_API tierfl_status tierfl_cost(const char* input_json, char** out_json);

/* Invariant self-test. `all_pass` may be NULL. */
TIERFL_API tierfl_status tierfl_check(uint64_t seed, char** out_json, int* all_pass);

#ifdef __cplusplus
}
#endif

#endif /* TIERFL_TIERFL_H_ */
