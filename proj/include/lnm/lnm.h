//  Copyright 2026 The lnm Authors
//
//  Licensed under the Apache License, Version 2.0 (the "License");
//  you may not use this file except in compliance with the License.
//  You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
//  Unless required by applicable law or agreed to in writing, software
//  distributed under the License is distributed on an "AS IS" BASIS,
//  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//  See the License for the specific language governing permissions and
//  limitations under the License.
//
// C interface to liblnm. Every call returns an lnm_status; on failure the
// message is available from lnm_last_error() on the same thread. Strings
// returned through char** are owned by the caller and released with
// lnm_string_free().
#ifndef LNM_LNM_H_
#define LNM_LNM_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define LNM_API __declspec(dllexport)
#else
#define LNM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lnm_status {
  LNM_OK = 0,
  LNM_EINVALID_ARGUMENT = 1,
  LNM_EINVALID_VOLUME = 2,
  LNM_EEMPTY_MASK = 3,
  LNM_EEMPTY_SHELL = 4,
  LNM_EEMPTY_SLICE = 5,
  LNM_EOUT_OF_BOUNDS = 6,
  LNM_EPRECONDITION = 7,
  LNM_EDEGENERATE_ROI = 8,
  LNM_EDEGENERATE_TRAINING = 9,
  LNM_ECONVERGENCE = 10,
  LNM_EDIVERGENCE = 11,
  LNM_ENUMERIC_FAULT = 12,
  LNM_ETUNING = 13,
  LNM_EDEGENERATE_LABELS = 14,
  LNM_EINFEASIBLE_PLAN = 15,
  LNM_EPARSE = 16,
  LNM_EIO = 17,
  LNM_EGENERATION = 18,
  LNM_EINTERNAL = 99
} lnm_status;

typedef struct lnm_cohort lnm_cohort;
typedef struct lnm_experiment lnm_experiment;

typedef struct lnm_cohort_counts {
  size_t patients;
  size_t nodes;
  size_t benign;
  size_t malignant;
} lnm_cohort_counts;

typedef struct lnm_extract_stats {
  size_t computed;
  size_t reused;
  size_t degenerate;
} lnm_extract_stats;

LNM_API const char* lnm_version(void);
LNM_API const char* lnm_status_name(lnm_status status);
// Message of the last failed call on this thread ("" if none).
LNM_API const char* lnm_last_error(void);
LNM_API lnm_status lnm_last_status(void);
LNM_API void lnm_string_free(char* s);

// Phantom config is a JSON object; unknown keys are rejected. NULL or "" uses defaults.
LNM_API lnm_status lnm_phantom_generate(const char* config_json, lnm_cohort** out);
LNM_API lnm_status lnm_cohort_load(const char* dir, lnm_cohort** out);
LNM_API lnm_status lnm_cohort_save(const lnm_cohort* cohort, const char* dir);
LNM_API lnm_status lnm_cohort_counts_get(const lnm_cohort* cohort, lnm_cohort_counts* out);
LNM_API lnm_status lnm_cohort_fingerprint(const lnm_cohort* cohort, char** out);
// Number of augmented stacks the default pose grid yields for the cohort.
LNM_API lnm_status lnm_cohort_augmented_count(const lnm_cohort* cohort, uint64_t* out);
LNM_API void lnm_cohort_free(lnm_cohort* cohort);

// sets is a comma list of d13, t82, a95, s6, flat512 (case-insensitive).
// cnn_checkpoint may be NULL unless flat512 is requested. threads <= 0 means all cores.
LNM_API lnm_status lnm_extract_features(const char* cohort_dir, const char* sets,
                                        const char* cnn_checkpoint, int threads,
                                        const char* out_csv, lnm_extract_stats* stats);

LNM_API lnm_status lnm_experiment_load(const char* config_path, lnm_experiment** out);
// Runs the configured experiment and writes its report files to the output
// directory. summary_text (may be NULL) receives the printed summary table.
LNM_API lnm_status lnm_experiment_run(lnm_experiment* experiment, char** summary_text);
// Trains a network on the whole configured cohort and saves it to checkpoint_path.
LNM_API lnm_status lnm_experiment_train_cnn(lnm_experiment* experiment,
                                            const char* checkpoint_path);
LNM_API void lnm_experiment_free(lnm_experiment* experiment);

// Formats a summary plus paired comparisons from previously written CSV files.
LNM_API lnm_status lnm_report(const char* outcomes_csv, const char* stats_csv, char** out);

#ifdef __cplusplus
}
#endif

#endif  // LNM_LNM_H_
