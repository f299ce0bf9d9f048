/*
 * Copyright 2026 The qufur-lab Authors
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

/* C interface to libqufur. Every call returns a qufur_status; on failure
 * qufur_last_error() holds a message for the calling thread. Handles are
 * opaque and owned by the caller, who releases them with the matching
 * *_destroy function (NULL is accepted). */

#ifndef QUFUR_QUFUR_H_
#define QUFUR_QUFUR_H_

#include <stddef.h>
#include <stdint.h>

#if defined(QUFUR_BUILDING)
#define QUFUR_API __attribute__((visibility("default")))
#else
#define QUFUR_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum qufur_status {
  QUFUR_OK = 0,
  QUFUR_ERR_INVALID_ARGUMENT = 1,
  QUFUR_ERR_CONFIG = 2,
  QUFUR_ERR_PARSE = 3,
  QUFUR_ERR_NUMERICAL = 4,
  QUFUR_ERR_INVALID_STATE = 5,
  QUFUR_ERR_RESOURCE_LIMIT = 6,
  QUFUR_ERR_IO = 7,
  QUFUR_ERR_INTERNAL = 8
} qufur_status;

QUFUR_API const char* qufur_version(void);
QUFUR_API const char* qufur_last_error(void);
QUFUR_API const char* qufur_status_name(qufur_status status);

/* Ridge state: lambda = 1 / C^2, inverse kept by rank-one updates. */
typedef struct qufur_rls qufur_rls;

QUFUR_API qufur_status qufur_rls_create(int dim, double norm_bound_C, qufur_rls** out);
QUFUR_API void qufur_rls_destroy(qufur_rls* rls);
QUFUR_API qufur_status qufur_rls_absorb(qufur_rls* rls, const double* x, double y);
/* ||x||^2 under the inverse Gram matrix. */
QUFUR_API qufur_status qufur_rls_quad_form(const qufur_rls* rls, const double* x, double* out);
/* Writes dim coefficients. */
QUFUR_API qufur_status qufur_rls_theta(const qufur_rls* rls, double* theta_out);
/* Row-major dim x dim. */
QUFUR_API qufur_status qufur_rls_gram_inverse(const qufur_rls* rls, double* out);

typedef struct qufur_decision {
  double prediction;
  double delta;
  double query_prob;
  int queried;
} qufur_decision;

/* A vector-input policy driven one round at a time. policy_json is a policy
 * object such as {"kind":"qufur","alpha":50,"eta":0.3}. */
typedef struct qufur_policy qufur_policy;

QUFUR_API qufur_status qufur_policy_create(const char* policy_json, int dim, size_t horizon, uint64_t seed,
                                           qufur_policy** out);
QUFUR_API void qufur_policy_destroy(qufur_policy* policy);
/* Rounds must be passed in increasing order starting at 0. */
QUFUR_API qufur_status qufur_policy_decide(qufur_policy* policy, const double* x, uint64_t round,
                                           qufur_decision* out);
/* Only valid right after a decision that queried the same x. */
QUFUR_API qufur_status qufur_policy_observe(qufur_policy* policy, const double* x, double label);

typedef struct qufur_experiment qufur_experiment;
typedef struct qufur_episode qufur_episode;

typedef struct qufur_totals {
  size_t rounds;
  size_t queries;
  int has_regret_R;
  double regret_R;
  double regret_Reg;
  double total_loss;
  int has_cost_W;
  double cost_W;
  uint64_t stream_hash;
} qufur_totals;

QUFUR_API qufur_status qufur_experiment_load(const char* path, qufur_experiment** out);
/* base_dir resolves relative paths in the config; NULL means ".". */
QUFUR_API qufur_status qufur_experiment_parse(const char* json_text, const char* base_dir, qufur_experiment** out);
QUFUR_API void qufur_experiment_destroy(qufur_experiment* exp);
QUFUR_API qufur_status qufur_experiment_seed_count(const qufur_experiment* exp, size_t* out);
QUFUR_API qufur_status qufur_experiment_run(const qufur_experiment* exp, uint64_t seed_index, qufur_episode** out);
/* Writes sweep.csv, sweep_aggregate.csv and runs_detail.csv. */
QUFUR_API qufur_status qufur_experiment_sweep(const qufur_experiment* exp, const char* out_dir);
QUFUR_API qufur_status qufur_experiment_export_stream(const qufur_experiment* exp, uint64_t seed_index,
                                                      const char* path);

QUFUR_API void qufur_episode_destroy(qufur_episode* ep);
QUFUR_API qufur_status qufur_episode_totals(const qufur_episode* ep, qufur_totals* out);
/* Per-round CSV: t,domain_id,prediction,delta,query_prob,queried,loss. */
QUFUR_API qufur_status qufur_episode_write_rounds(const qufur_episode* ep, const char* path);

/* Fixed-Budget QuFUR on the block/subblock adversary. dims[u], durations[u]
 * describe m domains; writes a CSV when out_path is non-NULL. */
QUFUR_API qufur_status qufur_lower_bound(const size_t* dims, const size_t* durations, size_t m,
                                         const size_t* budgets, size_t num_budgets, size_t num_seeds,
                                         uint64_t base_seed, const char* out_path, double* slope_out);

/* Eluder dimension of the class in a hypothesis-table JSON file over its
 * whole support. */
QUFUR_API qufur_status qufur_eluder_dimension(const char* class_path, double epsilon, size_t* out);

/* eigvals sorted non-increasing, every entry >= lambda. */
QUFUR_API qufur_status qufur_effective_dimension(const double* eigvals, size_t n, double lambda, int s, int* out);

#ifdef __cplusplus
}
#endif

#endif /* QUFUR_QUFUR_H_ */
