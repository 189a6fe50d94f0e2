/*
 * Copyright 2026 The exposurerec Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/*
 * C interface of the exposurerec library. Every object is an opaque handle
 * released with its matching *_free function. Every fallible call returns an
 * exrec_status; on failure exrec_last_error() describes the most recent error
 * raised on the calling thread. Strings returned through char** are released
 * with exrec_string_free.
 */

#ifndef EXPOSUREREC_H_
#define EXPOSUREREC_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define EXREC_API __declspec(dllexport)
#else
#define EXREC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum exrec_status {
  EXREC_OK = 0,
  EXREC_ERR_DIMENSION = 1,
  EXREC_ERR_DOMAIN = 2,
  EXREC_ERR_CONFIG = 3,
  EXREC_ERR_PARSE = 4,
  EXREC_ERR_CATALOG = 5,
  EXREC_ERR_INDEX = 6,
  EXREC_ERR_USAGE = 7,
  EXREC_ERR_LOAD = 8,
  EXREC_ERR_INPUT = 9,
  EXREC_ERR_EMPTY = 10,
  EXREC_ERR_IO = 11,
  EXREC_ERR_NULL_ARGUMENT = 12,
  EXREC_ERR_INTERNAL = 13
} exrec_status;

typedef struct exrec_dataset exrec_dataset;
typedef struct exrec_world exrec_world;
typedef struct exrec_recommender exrec_recommender;
typedef struct exrec_simulator exrec_simulator;
typedef struct exrec_metrics exrec_metrics;

EXREC_API const char* exrec_version(void);
EXREC_API const char* exrec_status_name(exrec_status status);
EXREC_API const char* exrec_last_error(void);
EXREC_API void exrec_string_free(char* s);

/* 0 silent, 1 warnings (default), 2 progress information. */
EXREC_API void exrec_set_log_level(int level);

/* ---- datasets (exposure-log text format) ---- */

EXREC_API exrec_status exrec_dataset_load(const char* path, exrec_dataset** out);
EXREC_API exrec_status exrec_dataset_parse(const char* text, exrec_dataset** out);
EXREC_API exrec_status exrec_dataset_save(const exrec_dataset* ds, const char* path);
EXREC_API exrec_status exrec_dataset_serialize(const exrec_dataset* ds, char** out);
EXREC_API size_t exrec_dataset_size(const exrec_dataset* ds);
EXREC_API size_t exrec_dataset_num_items(const exrec_dataset* ds);
/* Seeded shuffle into train/validation/test; ratios must sum to 1. */
EXREC_API exrec_status exrec_dataset_split(const exrec_dataset* ds, double train, double valid,
                                           double test, uint64_t seed, exrec_dataset** train_out,
                                           exrec_dataset** valid_out, exrec_dataset** test_out);
EXREC_API void exrec_dataset_free(exrec_dataset* ds);

/* ---- synthetic world ---- */

typedef struct exrec_world_params {
  size_t users;
  size_t items;
  size_t factors;
  double slope;
  double target_click_rate;
  uint64_t seed;
} exrec_world_params;

typedef enum exrec_policy_kind { EXREC_POLICY_BIASED = 0, EXREC_POLICY_UNIFORM = 1 } exrec_policy_kind;

typedef struct exrec_policy_params {
  exrec_policy_kind kind;
  double temperature;
  size_t slate_size;
} exrec_policy_params;

EXREC_API void exrec_world_params_default(exrec_world_params* p);
EXREC_API void exrec_policy_params_default(exrec_policy_params* p);
EXREC_API exrec_status exrec_world_generate(const exrec_world_params* p, exrec_world** out);
EXREC_API exrec_status exrec_world_load(const char* path, exrec_world** out);
EXREC_API exrec_status exrec_world_save(const exrec_world* w, const char* path);
EXREC_API exrec_status exrec_world_click_probability(const exrec_world* w, size_t user,
                                                     uint32_t item, double* out);
EXREC_API exrec_status exrec_world_simulate(const exrec_world* w, const exrec_policy_params* policy,
                                            size_t steps, uint64_t seed, exrec_dataset** out);
EXREC_API void exrec_world_free(exrec_world* w);

/* ---- models ---- */

typedef struct exrec_model_params {
  size_t d;
  size_t layers;
  size_t heads;
  size_t t_max;
  size_t window;
  double dropout;
  double learning_rate;
  /* Recommender rewards; ignored by the simulator. */
  double r_uni;
  double r_int;
  double gamma;
  uint64_t init_seed;
} exrec_model_params;

typedef struct exrec_train_params {
  size_t max_epochs;
  size_t patience;
  size_t batch_size;
  size_t eval_k;
  uint64_t seed;
} exrec_train_params;

typedef enum exrec_strategy {
  EXREC_STRATEGY_NONE = 0,
  EXREC_STRATEGY_RANDOM = 1,
  EXREC_STRATEGY_SELF_IMPROVING = 2
} exrec_strategy;

typedef struct exrec_augment_params {
  exrec_strategy strategy;
  double delta;
  size_t h;
  /* Negative selects 0.1 x RMS of the item embeddings. */
  double sigma;
  size_t max_epochs;
  uint64_t seed;
  /* Nonzero trains on the logged data plus the augmented set. */
  int include_original;
  /* Nonzero picks the top item instead of sampling during generation. */
  int greedy;
  double temperature;
  /* Nonzero labels feedback by p >= 0.5 instead of a Bernoulli draw. */
  int threshold_feedback;
} exrec_augment_params;

EXREC_API void exrec_model_params_default(exrec_model_params* p);
EXREC_API void exrec_train_params_default(exrec_train_params* p);
EXREC_API void exrec_augment_params_default(exrec_augment_params* p);

/* valid may be NULL (no early stopping). report, when not NULL, receives the
 * per-epoch training report as delimited text. */
EXREC_API exrec_status exrec_simulator_train(const exrec_model_params* model,
                                             const exrec_train_params* train,
                                             const exrec_dataset* train_set,
                                             const exrec_dataset* valid_set,
                                             exrec_simulator** out, char** report);
EXREC_API exrec_status exrec_simulator_load(const char* path, exrec_simulator** out);
EXREC_API exrec_status exrec_simulator_save(const exrec_simulator* sim, const char* path);
/* P(feedback = 1) of exposing `candidate` after the given exposure prefix. */
EXREC_API exrec_status exrec_simulator_predict(const exrec_simulator* sim, const uint32_t* items,
                                               const int* behaviors, size_t n, uint32_t candidate,
                                               double* out);
EXREC_API exrec_status exrec_simulator_quality(const exrec_simulator* sim, const exrec_world* w,
                                               const exrec_dataset* test, double* auc,
                                               double* spearman);
EXREC_API void exrec_simulator_free(exrec_simulator* sim);

/* augment may be NULL or use EXREC_STRATEGY_NONE for plain training; otherwise
 * sim and valid_set are required. augmented, when not NULL, receives the
 * augmented set of the selected epoch (or NULL without augmentation). */
EXREC_API exrec_status exrec_recommender_train(const exrec_model_params* model,
                                               const exrec_train_params* train,
                                               const exrec_augment_params* augment,
                                               const exrec_simulator* sim,
                                               const exrec_dataset* train_set,
                                               const exrec_dataset* valid_set,
                                               exrec_recommender** out, char** report,
                                               exrec_dataset** augmented);
EXREC_API exrec_status exrec_recommender_load(const char* path, exrec_recommender** out);
EXREC_API exrec_status exrec_recommender_save(const exrec_recommender* rec, const char* path);
EXREC_API size_t exrec_recommender_num_items(const exrec_recommender* rec);
/* Writes k item ids, best first, into out. */
EXREC_API exrec_status exrec_recommend(const exrec_recommender* rec, const uint32_t* interactions,
                                       size_t n, size_t k, uint32_t* out);
EXREC_API void exrec_recommender_free(exrec_recommender* rec);

/* ---- evaluation ---- */

EXREC_API exrec_status exrec_evaluate(const exrec_recommender* rec, const exrec_dataset* test,
                                      const size_t* ks, size_t nks, exrec_metrics** out);
EXREC_API exrec_status exrec_evaluate_oracle(const exrec_recommender* rec, const exrec_world* w,
                                             const exrec_dataset* test, const size_t* ks,
                                             size_t nks, exrec_metrics** out);
/* metric is "recall", "ndcg" or "coverage". */
EXREC_API exrec_status exrec_metrics_value(const exrec_metrics* m, const char* metric, size_t k,
                                           double* out);
EXREC_API size_t exrec_metrics_sequences(const exrec_metrics* m);
EXREC_API size_t exrec_metrics_excluded(const exrec_metrics* m);
EXREC_API exrec_status exrec_metrics_set_provenance(exrec_metrics* m, uint64_t seed,
                                                    const char* fingerprint);
EXREC_API exrec_status exrec_metrics_serialize(const exrec_metrics* m, char** out);
EXREC_API exrec_status exrec_metrics_save(const exrec_metrics* m, const char* path);
EXREC_API exrec_status exrec_metrics_load(const char* path, exrec_metrics** out);
EXREC_API void exrec_metrics_free(exrec_metrics* m);

/* Aggregates metrics files. labels[i] and deltas[i] describe paths[i].
 * summary and sweep (either may be NULL) receive the grouped table and the
 * delta-sweep rows of sweep_label at cutoff k. */
EXREC_API exrec_status exrec_report(const char* const* labels, const double* deltas,
                                    const char* const* paths, size_t n, const char* sweep_label,
                                    size_t k, char** summary, char** sweep);

/* ---- experiments ---- */

/* Runs a sectioned key-value experiment config; outputs go to output_dir,
 * or to run.output of the config when output_dir is NULL. */
EXREC_API exrec_status exrec_experiment_run(const char* config_path, const char* output_dir);
/* Canonical text and fingerprint of a config, for manifests. */
EXREC_API exrec_status exrec_experiment_canonical(const char* config_path, char** text,
                                                  char** fingerprint);
/* Hex FNV-1a fingerprint of arbitrary text. */
EXREC_API exrec_status exrec_fingerprint(const char* text, char** out);

#ifdef __cplusplus
}
#endif

#endif /* EXPOSUREREC_H_ */
